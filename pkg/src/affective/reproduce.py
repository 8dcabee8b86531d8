"""Reproduction tables for the worked examples and CSV plot data."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .economy import EconomyModel, competitive_equilibrium, efficiency_audit, planner_solve
from .equilibrium import find_parametric_equilibrium, local_dominance_check
from .model import InteractionModel, affection_jacobian, builtin_model
from .solver import induced_utilities, separable_induced
from .welfare import grid_cell, pareto_search, welfare_value, welfare_weights

EXAMPLES = ("linear-two-person", "nonseparable", "shifting-pos", "shifting-neg",
            "shifting-mixed", "economy")


@dataclass
class Row:
    label: str
    expected: float
    computed: float
    tol: float
    anchor: str

    @property
    def diff(self):
        return abs(self.computed - self.expected)

    @property
    def passed(self):
        return bool(np.isfinite(self.computed) and self.diff <= self.tol)


@dataclass
class Report:
    example: str
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    def add(self, label, expected, computed, tol, anchor):
        self.rows.append(Row(label, float(expected), float(computed), float(tol), anchor))

    def table(self):
        lines = [f"== {self.example} ==",
                 f"{'quantity':<34} {'expected':>12} {'computed':>14} {'abs diff':>10} "
                 f"{'tol':>8}  result  anchor"]
        for r in self.rows:
            lines.append(f"{r.label:<34} {r.expected:>12.6g} {r.computed:>14.8g} {r.diff:>10.2e} "
                         f"{r.tol:>8.0e}  {'pass' if r.passed else 'FAIL':<6}  {r.anchor}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)

    def to_json(self):
        return {"example": self.example, "passed": self.passed, "notes": self.notes,
                "rows": [{"quantity": r.label, "expected": r.expected, "computed": r.computed,
                          "abs_diff": r.diff, "tol": r.tol, "passed": r.passed,
                          "anchor": r.anchor} for r in self.rows]}


def beta1(y):
    """Closed-form induced best reply of player 1 in the non-separable example."""
    return (2 * np.sqrt(2 * y**3 - 2 * y**2 + y + 4) - 4) / y


def beta2(x):
    """Closed-form induced best reply of player 2 in the non-separable example."""
    return (np.sqrt(-2 * x**3 + 2 * x**2 + 16 * x + 64) - 8) / (2 * x)


def _linear(rep):
    m = builtin_model("example1")
    a, b = m.params["a"], m.params["b"]
    eq = find_parametric_equilibrium(m)
    game = separable_induced(m)
    rep.add("x* = argmax f", 0.5, eq.x[0], 1e-8, "dominant strategies")
    rep.add("y* = argmax g", 0.5, eq.x[1], 1e-8, "dominant strategies")
    f = g = 0.25
    rep.add("U1 = (f + a g)/(1 - ab)", (f + a * g) / (1 - a * b), eq.u[0], 1e-10,
            "separable induced game")
    rep.add("U2 = (g + b f)/(1 - ab)", (g + b * f) / (1 - a * b), eq.u[1], 1e-10,
            "separable induced game")
    rep.add("det(I - J) = 1 - ab", 1 - a * b, np.linalg.det(np.eye(2) - game.J), 1e-12,
            "separable induced game")
    cert = pareto_search(m, eq.x, eq.u)
    rep.add("Pareto witnesses found", 0, int(cert.improved), 0, "Pareto optimality")
    w = welfare_weights(game.B)
    rep.add("welfare weights exist", 1, int(w is not None), 0, "welfare weights")


def _nonseparable(rep):
    m = builtin_model("example2")
    eq = find_parametric_equilibrium(m)
    rep.add("x*", 0.24620, eq.x[0], 1e-4, "Nash point of the induced game")
    rep.add("y*", 0.50379, eq.x[1], 1e-4, "Nash point of the induced game")
    rep.add("x* - beta1(y*)", 0.0, eq.x[0] - beta1(eq.x[1]), 1e-4, "closed-form best replies")
    rep.add("y* - beta2(x*)", 0.0, eq.x[1] - beta2(eq.x[0]), 1e-4, "closed-form best replies")
    J = affection_jacobian(m, eq.x, eq.u)
    rep.add("J12 = -2x", -2 * eq.x[0], J[0, 1], 1e-12, "affection Jacobian")
    rep.add("J21 = y/8", eq.x[1] / 8, J[1, 0], 1e-12, "affection Jacobian")
    dom = local_dominance_check(m, eq)
    rep.add("max |d2U_i/dx_i dx_j|", 0.0, np.max(np.abs(dom.cross - np.diag(np.diag(dom.cross)))),
            dom.tol, "local dominance")
    cert = pareto_search(m, eq.x, eq.u)
    rep.add("Pareto witnesses found", 0, int(cert.improved), 0, "Pareto optimality")


def _shifting(rep, name, expected, anchor):
    m = builtin_model(name)
    eq = find_parametric_equilibrium(m)
    rep.add("x*", expected[0], eq.x[0], 1e-4, anchor)
    rep.add("y*", expected[1], eq.x[1], 1e-4, anchor)
    dom = local_dominance_check(m, eq)
    rep.add("max |d2U_i/dx_i dx_j|", 0.0, np.max(np.abs(dom.cross - np.diag(np.diag(dom.cross)))),
            dom.tol, "local dominance")
    cert = pareto_search(m, eq.x, eq.u)
    rep.add("Pareto witnesses in quadrant", 0, int(cert.improved), 0, "Pareto optimality")
    W = welfare_value(m, [0.5, 0.5], eq.x)
    cell = float(np.max(grid_cell(m)))
    rep.add("|argmax avg U - x*| (cells)", 0.0,
            float(np.max(np.abs(W.grid_argmax - eq.x))) / cell, 1.0,
            "average utility maximised in the quadrant")
    return m, eq


def _shifting_pos(rep):
    _shifting(rep, "example3-pos", (0.75197, 0.75197), "unique equilibrium, positive quadrant")


def _restricted(rep, name, expected, anchor):
    m, eq = _shifting(rep, name, expected, anchor)
    full = builtin_model("example3")
    cert = pareto_search(full, eq.x, eq.u)
    rep.add("full-box Pareto witness found", 1, int(cert.improved), 0,
            "optimal in the quadrant but not globally")
    rep.add("full-box avg gain over x*", 0.0, cert.best_average - float(np.mean(eq.u)), math.inf,
            "average utility, full box")
    rep.notes.append(
        f"full box: Pareto improvement at x={np.round(cert.witness_x, 5).tolist()} "
        f"u={np.round(cert.witness_u, 5).tolist()}; best grid average "
        f"{cert.best_average:.5f} vs {np.mean(eq.u):.5f} at x*")


def _shifting_neg(rep):
    _restricted(rep, "example3-neg", (-0.68266, -0.68266), "equilibrium, negative quadrant")


def _shifting_mixed(rep):
    _restricted(rep, "example3-mixed", (0.72471, -0.66576), "equilibrium, mixed quadrant")


def _economy(rep):
    e = EconomyModel(2.0, 0.25)
    ce = competitive_equilibrium(e)
    anchor = "competitive equilibrium"
    rep.add("p_x (p_m = 1)", 1.0, ce.price_good, 1e-10, anchor)
    rep.add("x1 at equilibrium", 1.0, ce.x[0], 1e-10, anchor)
    rep.add("x2 at equilibrium", 1.0, ce.x[1], 1e-10, anchor)
    rep.add("u1 goods part", 6.0, ce.goods_utilities[0], 1e-10, anchor)
    rep.add("u2 goods part", 2.5, ce.goods_utilities[1], 1e-10, anchor)
    pl = planner_solve(e, (1.0, 1.0))
    r = 5.0 / 12.0
    rep.add("planner x1 (2-digit target)", 0.29, pl.x[0], 5e-3, "planner, lambda = (1, 1)")
    rep.add("planner x1 (2r^2/(1+r^2))", 2 * r * r / (1 + r * r), pl.x[0], 1e-5,
            "closed-form root")
    rep.add("planner u1 (2-digit target)", 6.28, pl.goods_utilities[0], 5e-2, "planner utilities")
    rep.add("planner u2 (2-digit target)", 2.87, pl.goods_utilities[1], 5e-2, "planner utilities")
    x1 = 2 * r * r / (1 + r * r)
    root = np.sqrt([x1, 2 - x1])
    rep.add("planner u1 (2 sqrt x1 + 4 sqrt x2)", 2 * root[0] + 4 * root[1],
            pl.goods_utilities[0], 1e-4, "closed-form root")
    rep.add("planner u2 (sqrt x1 / 2 + 2 sqrt x2)", 0.5 * root[0] + 2 * root[1],
            pl.goods_utilities[1], 1e-4, "closed-form root")
    audit = efficiency_audit(e)
    rep.add("weight ray lambda1/lambda2", -0.75, audit.ray[0] / audit.ray[1], 1e-12,
            "planner condition at x1 = 1")
    rep.add("improvement dominates", 1, int(audit.improvement is not None), 0,
            "planner improvement")
    rep.notes.append(
        "the first-order condition sqrt'(x) = p_x at x = 1 gives p_x = 1/2 with p_m = 1; "
        "the allocation and utilities do not depend on the price level")


_RUNNERS = {"linear-two-person": _linear, "nonseparable": _nonseparable,
            "shifting-pos": _shifting_pos, "shifting-neg": _shifting_neg,
            "shifting-mixed": _shifting_mixed, "economy": _economy}


def reproduce(example_id: str) -> Report:
    if example_id not in _RUNNERS:
        raise KeyError(f"unknown example {example_id!r}; choose from {', '.join(EXAMPLES)}")
    rep = Report(example_id)
    _RUNNERS[example_id](rep)
    return rep


# ---------------------------------------------------------------------------
# plot data

PLOT_KINDS = ("reaction-curves", "surface:U1", "surface:U2", "welfare-surface")


def _fmt(v):
    return "nan" if not np.isfinite(v) else f"{v:.12g}"


def induced_best_reply(model: InteractionModel, i: int, others, grid: int = 512,
                       lo=None, hi=None):
    """Best reply of player ``i`` in the induced game for each profile in ``others``.

    ``others`` is ``(k, n)``; column ``i`` is overwritten.  Coarse grid argmax
    followed by golden-section refinement on the bracketing cells.
    """
    others = np.atleast_2d(np.asarray(others, dtype=float))
    box = model.window_box()
    lo = box[i, 0] if lo is None else lo
    hi = box[i, 1] if hi is None else hi
    pts = np.linspace(lo, hi, grid)
    k = others.shape[0]
    X = np.repeat(others, grid, axis=0)
    X[:, i] = np.tile(pts, k)
    U, ok = induced_utilities(model, X)
    vals = np.where(ok, U[:, i], -np.inf).reshape(k, grid)
    best = np.argmax(vals, axis=1)
    a = pts[np.maximum(best - 1, 0)]
    b = pts[np.minimum(best + 1, grid - 1)]
    g = (math.sqrt(5) - 1) / 2

    def value(t):
        Y = others.copy()
        Y[:, i] = t
        Uy, oky = induced_utilities(model, Y)
        return np.where(oky, Uy[:, i], -np.inf)

    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = value(c), value(d)
    for _ in range(60):
        left = fc > fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = b - g * (b - a)
        d_new = a + g * (b - a)
        c, d = c_new, d_new
        fc, fd = value(c), value(d)
    return 0.5 * (a + b), np.any(np.isfinite(vals), axis=1)


def emit_plot_data(model: InteractionModel, kind: str, ranges=None, resolution: int = 200,
                   weights=(0.5, 0.5)) -> str:
    """CSV text for reaction curves or induced-utility / welfare surfaces."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}")
    if model.n != 2:
        raise ValueError("plot data is available for two-player models only")
    box = model.window_box() if ranges is None else np.asarray(ranges, dtype=float).reshape(2, 2)
    xs = np.linspace(box[0, 0], box[0, 1], resolution)
    ys = np.linspace(box[1, 0], box[1, 1], resolution)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if kind == "reaction-curves":
        prof1 = np.zeros((resolution, 2))
        prof1[:, 1] = ys
        b1, ok1 = induced_best_reply(model, 0, prof1, lo=box[0, 0], hi=box[0, 1])
        prof2 = np.zeros((resolution, 2))
        prof2[:, 0] = xs
        b2, ok2 = induced_best_reply(model, 1, prof2, lo=box[1, 0], hi=box[1, 1])
        if not (ok1.any() or ok2.any()):
            raise ValueError("induced game undefined everywhere on the range")
        w.writerow([f"{model.names[1]}", f"beta1", f"{model.names[0]}", f"beta2"])
        for k in range(resolution):
            w.writerow([_fmt(ys[k]), _fmt(b1[k] if ok1[k] else np.nan),
                        _fmt(xs[k]), _fmt(b2[k] if ok2[k] else np.nan)])
        return buf.getvalue()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.stack([X.ravel(), Y.ravel()], axis=-1)
    U, ok = induced_utilities(model, P)
    if not ok.any():
        raise ValueError("induced game undefined everywhere on the range")
    if kind == "surface:U1":
        val, name = U[:, 0], "U1"
    elif kind == "surface:U2":
        val, name = U[:, 1], "U2"
    else:
        val, name = U @ np.asarray(weights, dtype=float), "W"
    w.writerow([model.names[0], model.names[1], name, "defined"])
    for k in range(P.shape[0]):
        w.writerow([_fmt(P[k, 0]), _fmt(P[k, 1]), _fmt(val[k]) if ok[k] else "nan", int(ok[k])])
    return buf.getvalue()
