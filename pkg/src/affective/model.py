"""Purely affective interaction models.

A model has ``n`` players; player ``i`` picks a scalar action in an open
interval and has utility ``V_i(x_i, u_{-i})`` written as an expression over
its own action name and the reserved utility names ``u1 .. un`` (never its
own).  All array arguments follow the convention that the player index is
the *last* axis, so ``x`` of shape ``(n,)`` is one profile and ``(m, n)`` is a
batch of ``m`` profiles.

Model file format (UTF-8, ``#`` starts a comment)::

    players: 2
    param a: 2
    var 1: x in (0, 1)
    var 2: y in (0, 1)
    utility 1: x*(1-x) + a*u2
    utility 2: y*(1-y) + b*u1
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex

MAX_PLAYERS = 12
INSET = 1e-6
# finite stand-in for an infinite side when a search window is needed
WINDOW = 10.0

_UTIL_NAME = re.compile(r"^u([0-9]+)$")


class ModelError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NonAffectiveReferenceError(ModelError):
    """A utility mentions another player's action or its own utility."""

    def __init__(self, player, name, message, line=None):
        super().__init__(message, line)
        self.player = player
        self.variable = name


@dataclass(frozen=True)
class Action:
    name: str
    lo: float
    hi: float

    def inset(self):
        """Closed interval strictly inside the open action set."""
        lo, hi = self.lo, self.hi
        if math.isfinite(lo) and math.isfinite(hi):
            eps = INSET * (hi - lo)
            return lo + eps, hi - eps
        return (lo + INSET if math.isfinite(lo) else lo,
                hi - INSET if math.isfinite(hi) else hi)

    def window(self):
        """Finite version of :meth:`inset` used by grids and samplers."""
        lo, hi = self.inset()
        if not math.isfinite(lo):
            lo = hi - 2 * WINDOW if math.isfinite(hi) else -WINDOW
        if not math.isfinite(hi):
            hi = lo + 2 * WINDOW if self.lo != -math.inf else WINDOW
        return lo, hi


class InteractionModel:
    """Validated, immutable interaction model with cached derivatives."""

    def __init__(self, actions: Sequence[Action], utilities: Sequence[ex.Expr],
                 params: Mapping[str, float] | None = None, source: str | None = None):
        n = len(actions)
        if not 2 <= n <= MAX_PLAYERS:
            raise ModelError(f"need 2 <= players <= {MAX_PLAYERS}, got {n}")
        if len(utilities) != n:
            raise ModelError("one utility per player is required")
        self.n = n
        self.actions = tuple(actions)
        self.utilities = tuple(utilities)
        self.params = dict(params or {})
        self.source = source
        self.names = tuple(a.name for a in self.actions)
        self.utility_names = tuple(f"u{i + 1}" for i in range(n))
        _validate(self)

        # symbolic derivative tables
        self.dV_du = tuple(tuple(ex.differentiate(self.utilities[i], self.utility_names[j])
                                 for j in range(n)) for i in range(n))
        self.dV_dx = tuple(ex.differentiate(self.utilities[i], self.names[i]) for i in range(n))
        self.d2V_dx2 = tuple(ex.differentiate(self.dV_dx[i], self.names[i]) for i in range(n))
        self.d2V_dxdu = tuple(tuple(ex.differentiate(self.dV_dx[i], self.utility_names[j])
                                    for j in range(n)) for i in range(n))
        for i in range(n):
            assert ex.is_zero(self.dV_du[i][i])

    def __repr__(self):
        return f"InteractionModel(n={self.n}, actions={self.names})"

    def inset_box(self):
        return np.array([a.inset() for a in self.actions])

    def window_box(self):
        return np.array([a.window() for a in self.actions])

    def clamp(self, x):
        box = self.inset_box()
        return np.clip(x, box[:, 0], box[:, 1])

    def is_interior(self, x):
        x = np.asarray(x, dtype=float)
        lo = np.array([a.lo for a in self.actions])
        hi = np.array([a.hi for a in self.actions])
        return bool(np.all((x > lo) & (x < hi)))

    def env(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        env = {name: x[..., k] for k, name in enumerate(self.names)}
        env.update({name: u[..., k] for k, name in enumerate(self.utility_names)})
        return env

    def _table(self, exprs, x, u, strict):
        env = self.env(x, u)
        shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1])
        vals = [np.broadcast_to(ex.evaluate(e, env, strict), shape) for e in exprs]
        return np.stack(vals, axis=-1)

    def with_params(self, **overrides):
        """Reload from source with some parameters replaced."""
        if self.source is None:
            raise ModelError("model has no source text to reload")
        return load_model(self.source, params=overrides)


def _validate(model):
    for i, e in enumerate(model.utilities):
        for name in sorted(ex.variables(e)):
            if name == model.names[i]:
                continue
            m = _UTIL_NAME.match(name)
            if m and 1 <= int(m.group(1)) <= model.n:
                if int(m.group(1)) == i + 1:
                    raise NonAffectiveReferenceError(
                        i + 1, name, f"utility {i + 1} references its own utility {name}")
                continue
            if name in model.names:
                raise NonAffectiveReferenceError(
                    i + 1, name,
                    f"non-affective reference: utility {i + 1} uses action {name!r} "
                    f"of player {model.names.index(name) + 1}")
            raise ModelError(f"utility {i + 1}: unknown identifier {name!r}")


# ---------------------------------------------------------------------------
# loading

_LINE_PLAYERS = re.compile(r"^players\s*:\s*(\S+)$")
_LINE_PARAM = re.compile(r"^param\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(\S+)$")
_LINE_VAR = re.compile(
    r"^var\s+(\d+)\s*:\s*([A-Za-z_][A-Za-z0-9_]*)\s+in\s+\(\s*([^,]+?)\s*,\s*([^)]+?)\s*\)$")
_LINE_UTIL = re.compile(r"^utility\s+(\d+)\s*:\s*(.+)$")


def _real(text, lineno):
    t = text.strip().lower()
    if t in ("inf", "+inf"):
        return math.inf
    if t == "-inf":
        return -math.inf
    try:
        v = float(t)
    except ValueError:
        raise ModelError(f"not a real number: {text!r}", lineno) from None
    if math.isnan(v):
        raise ModelError("NaN is not allowed", lineno)
    return v


def load_model(document: str, params: Mapping[str, float] | None = None) -> InteractionModel:
    """Parse and validate a model document.

    ``params`` overrides (or adds) ``param`` values from the document.
    """
    n = None
    declared = {}
    vars_ = {}
    utils = {}
    for lineno, raw in enumerate(document.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _LINE_PLAYERS.match(line):
            if n is not None:
                raise ModelError("duplicate players line", lineno)
            try:
                n = int(m.group(1))
            except ValueError:
                raise ModelError(f"bad player count {m.group(1)!r}", lineno) from None
        elif m := _LINE_PARAM.match(line):
            name = m.group(1)
            if _UTIL_NAME.match(name) or name in ex.FUNCTIONS:
                raise ModelError(f"reserved name {name!r}", lineno)
            declared[name] = _real(m.group(2), lineno)
        elif m := _LINE_VAR.match(line):
            i = int(m.group(1))
            name = m.group(2)
            if _UTIL_NAME.match(name) or name in ex.FUNCTIONS:
                raise ModelError(f"reserved name {name!r}", lineno)
            lo, hi = _real(m.group(3), lineno), _real(m.group(4), lineno)
            if not lo < hi:
                raise ModelError(f"empty interval ({lo}, {hi})", lineno)
            if i in vars_:
                raise ModelError(f"duplicate var for player {i}", lineno)
            vars_[i] = (Action(name, lo, hi), lineno)
        elif m := _LINE_UTIL.match(line):
            i = int(m.group(1))
            if i in utils:
                raise ModelError(f"duplicate utility for player {i}", lineno)
            utils[i] = (m.group(2), lineno)
        else:
            raise ModelError(f"cannot parse {line!r}", lineno)

    if n is None:
        raise ModelError("missing 'players:' line")
    if not 2 <= n <= MAX_PLAYERS:
        raise ModelError(f"need 2 <= players <= {MAX_PLAYERS}, got {n}")
    values = dict(declared)
    if params:
        values.update({k: float(v) for k, v in params.items()})
    for i in range(1, n + 1):
        if i not in vars_:
            raise ModelError(f"missing var line for player {i}")
        if i not in utils:
            raise ModelError(f"missing utility line for player {i}")
    extra = set(vars_) | set(utils)
    if extra - set(range(1, n + 1)):
        raise ModelError(f"player index out of range: {sorted(extra - set(range(1, n + 1)))}")
    actions = [vars_[i][0] for i in range(1, n + 1)]
    names = [a.name for a in actions]
    if len(set(names)) != n:
        raise ModelError("action names must be distinct")
    if set(names) & set(values):
        raise ModelError(f"name used as both action and param: {sorted(set(names) & set(values))}")

    utilities = []
    for i in range(1, n + 1):
        text, lineno = utils[i]
        try:
            e = ex.parse(text, constants=values)
        except ex.ParseError as err:
            raise ModelError(str(err), lineno) from None
        except ex.ExprError as err:
            raise ModelError(str(err), lineno) from None
        utilities.append(e)
    try:
        return InteractionModel(actions, utilities, values, source=document)
    except NonAffectiveReferenceError as err:
        raise NonAffectiveReferenceError(err.player, err.variable, str(err),
                                         utils[err.player][1]) from None
    except ModelError as err:
        raise ModelError(str(err)) from None


def load_model_file(path, params=None) -> InteractionModel:
    return load_model(Path(path).read_text(encoding="utf-8"), params=params)


def builtin_names():
    files = resources.files("affective") / "models"
    return sorted(p.name for p in files.iterdir() if p.name.endswith(".model"))


def builtin_text(name: str) -> str:
    if not name.endswith(".model"):
        name += ".model"
    path = resources.files("affective") / "models" / name
    if not path.is_file():
        raise ModelError(f"no built-in model {name!r}; available: {', '.join(builtin_names())}")
    return path.read_text(encoding="utf-8")


def builtin_model(name: str, **params) -> InteractionModel:
    """Load one of the example models shipped with the package."""
    return load_model(builtin_text(name), params=params or None)


# ---------------------------------------------------------------------------
# V, F and J


def evaluate_v(model: InteractionModel, x, u, strict: bool = True) -> np.ndarray:
    """``V_x(u)``; component ``i`` is player ``i``'s utility expression."""
    return model._table(model.utilities, x, u, strict)


def residual(model: InteractionModel, x, u, strict: bool = True) -> np.ndarray:
    """Consistency residual ``F_x(u) = u - V_x(u)``."""
    return np.asarray(u, dtype=float) - evaluate_v(model, x, u, strict)


def affection_jacobian(model: InteractionModel, x, u, strict: bool = True) -> np.ndarray:
    """``J[i, j] = dV_i/du_j`` at ``(x, u)``, shape ``(..., n, n)``.

    The diagonal is exactly zero.
    """
    n = model.n
    env = model.env(x, u)
    shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1])
    J = np.zeros(shape + (n, n))
    for i in range(n):
        for j in range(n):
            d = model.dV_du[i][j]
            if not ex.is_zero(d):
                J[..., i, j] = ex.evaluate(d, env, strict)
    return J


def own_derivative(model: InteractionModel, x, u, strict: bool = True) -> np.ndarray:
    """``dV_i/dx_i`` for each player, shape ``(..., n)``."""
    return model._table(model.dV_dx, x, u, strict)


def own_curvature(model: InteractionModel, x, u, strict: bool = True) -> np.ndarray:
    """``d2V_i/dx_i^2`` for each player."""
    return model._table(model.d2V_dx2, x, u, strict)


def own_cross(model: InteractionModel, x, u, strict: bool = True) -> np.ndarray:
    """``d2V_i/dx_i du_j``, shape ``(..., n, n)``."""
    n = model.n
    env = model.env(x, u)
    shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1])
    out = np.zeros(shape + (n, n))
    for i in range(n):
        for j in range(n):
            d = model.d2V_dxdu[i][j]
            if not ex.is_zero(d):
                out[..., i, j] = ex.evaluate(d, env, strict)
    return out


def is_separable(model: InteractionModel) -> bool:
    """True when every ``dV_i/du_j`` is a constant (linear separable affection).

    Checked by differentiating each ``dV_i/du_j`` once more and asking for
    the zero tree, then requiring the derivative itself to be variable free.
    """
    for i in range(model.n):
        for j in range(model.n):
            d = model.dV_du[i][j]
            names = model.names + model.utility_names
            if not all(ex.is_zero(ex.differentiate(d, v)) for v in names):
                return False
            if not ex.is_constant(d):
                return False
    return True
