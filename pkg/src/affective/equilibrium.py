"""Parametric equilibria, their verification, and local dominance.

A parametric equilibrium is a consistent ``(x*, u*)`` where each player's
action maximises ``V_i(., u*_{-i})``.  Verification covers both that
definition and the Nash property of the induced game obtained by
re-solving consistency after each unilateral deviation.  Saddle points of a
player's *induced* utility are accepted; only deviations count.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .model import (InteractionModel, evaluate_v, own_cross, own_curvature, own_derivative,
                    residual, affection_jacobian)
from .solver import (ConsistencyError, induced_game, induced_utilities, solve_consistency)

GRID = 512
TOL_CONSISTENT = 1e-10
TOL_FOC = 1e-8
TOL_PARAMETRIC = 1e-9
TOL_NASH = 1e-7
TIE = 1e-12


class EquilibriumNotFound(RuntimeError):
    pass


class BoundaryOptimumError(RuntimeError):
    """The best reply sits at the edge of the inset action interval."""

    def __init__(self, player, value):
        super().__init__(f"player {player}: supremum at the inset boundary ({value:.6g})")
        self.player = player
        self.value = value


class PreconditionError(ValueError):
    pass


@dataclass
class VerificationReport:
    consistent: bool
    foc: bool
    parametric: bool
    nash: bool
    consistency_residual: float
    foc_residual: np.ndarray
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return self.consistent and self.foc and self.parametric and self.nash

    def flags(self):
        return {"consistent": self.consistent, "foc": self.foc,
                "parametric": self.parametric, "nash": self.nash}


@dataclass
class EquilibriumResult:
    x: np.ndarray
    u: np.ndarray
    consistency_residual: float
    foc: np.ndarray
    curvature: np.ndarray
    report: VerificationReport
    method: str
    status: str  # "verified" | "not-maximum" | "unverified"

    @property
    def ok(self):
        return self.status == "verified"

    @property
    def flags(self):
        return self.report.flags()

    def to_json(self):
        return {"x": self.x.tolist(), "u": self.u.tolist(), "foc": self.foc.tolist(),
                "curvature": self.curvature.tolist(),
                "consistency_residual": self.consistency_residual,
                "flags": self.flags, "status": self.status, "method": self.method,
                "violations": self.report.violations}


# ---------------------------------------------------------------------------
# best replies


def _own_values(model, i, grid, u):
    n = model.n
    X = np.zeros((grid.size, n))
    X[:, i] = grid
    U = np.broadcast_to(np.asarray(u, dtype=float), (grid.size, n))
    env = model.env(X, U)
    V = ex.evaluate(model.utilities[i], env, strict=False)
    D = ex.evaluate(model.dV_dx[i], env, strict=False)
    return np.broadcast_to(V, grid.shape), np.broadcast_to(D, grid.shape)


def best_reply(model: InteractionModel, i: int, u, grid: int = GRID) -> float:
    """Maximiser of ``V_i(., u_{-i})`` over player ``i``'s (0-based) action set.

    Sign changes of the own derivative on a grid bracket the local maxima,
    which are refined by bisection; the best by value wins, ties going to
    the smaller action.  ``u[i]`` is ignored.
    """
    lo, hi = model.actions[i].window()
    pts = np.linspace(lo, hi, grid)
    V, D = _own_values(model, i, pts, u)
    cands = []
    for k in range(grid - 1):
        a, b = D[k], D[k + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a > 0 and b <= 0:
            cands.append(_bisect(model, i, u, pts[k], pts[k + 1]))
    if not cands:
        edge = pts[np.nanargmax(V)]
        raise BoundaryOptimumError(i + 1, float(edge))
    cands = np.array(cands)
    vals, _ = _own_values(model, i, cands, u)
    best = np.max(vals)
    edge_best = max(V[0], V[-1])
    if np.isfinite(edge_best) and edge_best > best + TIE:
        raise BoundaryOptimumError(i + 1, float(pts[0] if V[0] >= V[-1] else pts[-1]))
    return float(np.min(cands[vals >= best - TIE]))


def _bisect(model, i, u, a, b):
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        _, d = _own_values(model, i, np.array([mid]), u)
        if d[0] > 0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# Newton on the stacked first-order + consistency system


def _stacked(model, x, u):
    n = model.n
    G = np.concatenate([own_derivative(model, x, u), residual(model, x, u)])
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = np.diag(own_curvature(model, x, u))
    H[:n, n:] = own_cross(model, x, u)
    H[n:, :n] = -np.diag(own_derivative(model, x, u))
    H[n:, n:] = np.eye(n) - affection_jacobian(model, x, u)
    return G, H


def _newton_equilibrium(model, x, u, tol=1e-13, maxiter=100):
    n = model.n
    for _ in range(maxiter):
        try:
            G, H = _stacked(model, x, u)
        except ex.DomainError:
            return x, u, False
        g = np.max(np.abs(G))
        if g <= tol:
            return x, u, True
        try:
            step = np.linalg.solve(H, -G)
        except np.linalg.LinAlgError:
            return x, u, False
        t = 1.0
        for _h in range(31):
            xt = model.clamp(x + t * step[:n])
            ut = u + t * step[n:]
            try:
                gt = np.max(np.abs(_stacked(model, xt, ut)[0]))
            except ex.DomainError:
                gt = np.inf
            if gt < g:
                break
            t *= 0.5
        else:
            return x, u, g <= 1e-10
        x, u = xt, ut
    G, _ = _stacked(model, x, u)
    return x, u, np.max(np.abs(G)) <= 1e-10


def _best_reply_iteration(model, x, rounds=500, seed=42):
    u = solve_consistency(model, x, multistart=False).u
    for _ in range(rounds):
        xn = np.array([best_reply(model, i, u) for i in range(model.n)])
        un = solve_consistency(model, xn, guess=u, multistart=False).u
        done = np.max(np.abs(xn - x)) < 1e-13
        x, u = xn, un
        if done:
            break
    return x, u


def _result(model, x, u, method, grid):
    report = verify_equilibrium(model, x, u, grid=grid)
    if report.ok:
        status = "verified"
    elif report.consistent and report.foc:
        status = "not-maximum"
    else:
        status = "unverified"
    return EquilibriumResult(x, u, report.consistency_residual, report.foc_residual,
                             own_curvature(model, x, u), report, method, status)


def find_parametric_equilibrium(model: InteractionModel, start=None,
                                grid: int = GRID) -> EquilibriumResult:
    """Parametric equilibrium near ``start`` (default: centre of the action box).

    Newton on the ``2n`` equations ``dV_i/dx_i = 0``, ``u = V_x(u)`` first;
    if that fails or lands on a non-maximum, best-reply iteration takes over
    and Newton polishes its limit.  A converged point whose grid check finds
    a profitable deviation comes back with ``status == "not-maximum"``.
    """
    box = model.window_box()
    x0 = box.mean(axis=1) if start is None else model.clamp(np.asarray(start, dtype=float))
    try:
        u0 = solve_consistency(model, x0, multistart=False).u
    except ConsistencyError as err:
        raise EquilibriumNotFound(f"induced game undefined at start {x0.tolist()}") from err
    x, u, ok = _newton_equilibrium(model, x0, u0)
    first = None
    if ok:
        res = _result(model, x, u, "newton", grid)
        if res.ok:
            return res
        first = res
    try:
        xb, ub = _best_reply_iteration(model, x0)
        xb, ub, okb = _newton_equilibrium(model, xb, ub)
    except (BoundaryOptimumError, ConsistencyError):
        okb = False
    if okb:
        res = _result(model, xb, ub, "best-reply", grid)
        if res.ok or first is None:
            return res
    if first is not None:
        return first
    raise EquilibriumNotFound(f"no equilibrium found from start {x0.tolist()}")


# ---------------------------------------------------------------------------
# verification


def verify_equilibrium(model: InteractionModel, x, u, grid: int = GRID) -> VerificationReport:
    """Check consistency, first-order conditions, the parametric inequality
    on a grid of own deviations, and Nash optimality in the induced game.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = model.n
    violations = []
    F = residual(model, x, u)
    cres = float(np.max(np.abs(F)))
    consistent = cres <= TOL_CONSISTENT
    if not consistent:
        violations.append({"check": "consistency", "residual": cres})
    foc = own_derivative(model, x, u)
    foc_ok = bool(np.max(np.abs(foc)) <= TOL_FOC)
    if not foc_ok:
        violations.append({"check": "foc", "residual": foc.tolist()})

    V0 = evaluate_v(model, x, u)
    box = model.window_box()
    parametric = True
    for i in range(n):
        pts = np.linspace(box[i, 0], box[i, 1], grid)
        V, _ = _own_values(model, i, pts, u)
        gain = V - V0[i]
        k = int(np.nanargmax(gain))
        if gain[k] > TOL_PARAMETRIC:
            parametric = False
            violations.append({"check": "parametric", "player": i + 1,
                               "deviation": float(pts[k]), "gain": float(gain[k])})

    nash = True
    if consistent:
        for i in range(n):
            pts = np.linspace(box[i, 0], box[i, 1], grid)
            X = np.repeat(x[None], grid, axis=0)
            X[:, i] = pts
            U, defined = induced_utilities(model, X)
            gain = np.where(defined, U[:, i] - u[i], -np.inf)
            k = int(np.argmax(gain))
            if gain[k] > TOL_NASH:
                nash = False
                violations.append({"check": "nash", "player": i + 1,
                                   "deviation": float(pts[k]), "gain": float(gain[k])})
    else:
        nash = False
    return VerificationReport(consistent, foc_ok, parametric, nash, cres, foc, violations)


@dataclass
class DominanceReport:
    passed: bool
    cross: np.ndarray       # cross[i, j] ~ d2U_i/dx_i dx_j (diagonal = own curvature)
    own_gradient: np.ndarray  # dU_i/dx_i at x*
    scale: float
    tol: float


def local_dominance_check(model: InteractionModel, eq: EquilibriumResult, h: float = 1e-4,
                          tol: float = 1e-4) -> DominanceReport:
    """Cross partials of the induced game at a verified equilibrium.

    Central differences of the implicit-function gradient in each ``x_j``;
    passes when every off-diagonal ``|d2U_i/dx_i dx_j|`` is at most
    ``tol * max(1, max_i |d2U_i/dx_i^2|)`` and each own slope vanishes.
    """
    if not eq.ok:
        raise PreconditionError("local dominance is only defined at a verified equilibrium")
    n = model.n
    g0 = induced_game(model, eq.x, guess=eq.u)
    if not g0.defined or g0.grad is None:
        raise PreconditionError("induced game undefined at the equilibrium")
    C = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        gp = induced_game(model, eq.x + e, guess=eq.u)
        gm = induced_game(model, eq.x - e, guess=eq.u)
        if not (gp.defined and gm.defined):
            raise PreconditionError(f"induced game undefined near x* along x{j + 1}")
        C[:, j] = (np.diag(gp.grad) - np.diag(gm.grad)) / (2 * h)
    own = np.diag(g0.grad).copy()
    scale = float(np.max(np.abs(np.diag(C))))
    off = C - np.diag(np.diag(C))
    bound = tol * max(1.0, scale)
    passed = bool(np.max(np.abs(off)) <= bound and np.max(np.abs(own)) <= TOL_FOC * 10)
    return DominanceReport(passed, C, own, scale, bound)
