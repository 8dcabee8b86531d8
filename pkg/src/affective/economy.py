"""Two-agent exchange economy with affective interaction.

Agents have base utility ``sqrt(x_i) + m_i`` in one divisible good ``x`` and
money ``m``, affection ``V_1 = base_1 + a u_2``, ``V_2 = base_2 + b u_1``
with ``ab < 1``, and endowments ``(1, M)`` each.  Induced utilities are
``U = B (sqrt(x) + m)`` with ``B = [[1, a], [b, 1]] / (1 - ab)``.

Money enters linearly and endowments are symmetric, so at any allocation
that leaves money holdings at ``M`` the money part of every induced utility
is the common shift ``c_m = (row sum of B) * M``.  Reports quote the goods
part ``B sqrt(x)`` only.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .welfare import welfare_weights

class EconomyError(ValueError):
    pass


@dataclass(frozen=True)
class EconomyModel:
    a: float
    b: float
    M: float = 100.0
    supply: float = 2.0  # total good, one unit per agent

    def __post_init__(self):
        if not self.a * self.b < 1:
            raise EconomyError(f"need ab < 1, got a={self.a}, b={self.b}")

    @property
    def B(self):
        return np.array([[1.0, self.a], [self.b, 1.0]]) / (1.0 - self.a * self.b)

    def goods_utilities(self, x1):
        x = np.array([x1, self.supply - x1])
        return self.B @ np.sqrt(x)

    def money_shift(self, m=None):
        m = np.array([self.M, self.M]) if m is None else np.asarray(m, dtype=float)
        return self.B @ m


@dataclass
class CompetitiveEquilibrium:
    price_good: float
    price_money: float
    x: np.ndarray
    m: np.ndarray
    goods_utilities: np.ndarray
    money_shift: np.ndarray

    def to_json(self):
        return {"p_x": self.price_good, "p_m": self.price_money, "x": self.x.tolist(),
                "m": self.m.tolist(), "goods_utilities": self.goods_utilities.tolist(),
                "money_shift": self.money_shift.tolist()}


def competitive_equilibrium(economy: EconomyModel) -> CompetitiveEquilibrium:
    """Walrasian equilibrium with money as numeraire (``p_m = 1``).

    Each agent's own bundle enters its induced utility with the common
    positive factor ``1 / (1 - ab)``, so demand solves
    ``d sqrt(x_i) / dx_i = p_x``, i.e. ``x_i = 1 / (4 p_x^2)``.  Market
    clearing ``x_1 + x_2 = 2`` then fixes ``p_x``.
    """
    own = np.diag(economy.B)
    if np.any(own <= 0):
        raise EconomyError("own weight in the induced utility must be positive")
    # 2 / (4 p^2) = supply
    p = np.sqrt(2.0 / (4.0 * economy.supply))
    x = np.full(2, 1.0 / (4.0 * p * p))
    endow = economy.supply / 2.0
    m = economy.M + p * (endow - x)
    if np.any(m <= 0):
        raise EconomyError("money holdings turn negative; increase M")
    return CompetitiveEquilibrium(float(p), 1.0, x, m, economy.B @ np.sqrt(x),
                                  economy.money_shift(m))


@dataclass
class PlannerSolution:
    weights: np.ndarray
    x: np.ndarray
    goods_utilities: np.ndarray
    ratio: float            # right-hand side of the planner condition
    foc_residual: float

    def to_json(self):
        return {"lambda": self.weights.tolist(), "x": self.x.tolist(),
                "goods_utilities": self.goods_utilities.tolist(), "ratio": self.ratio,
                "foc_residual": self.foc_residual}


def planner_ratio(economy: EconomyModel, lam):
    lam1, lam2 = lam
    den = lam1 * economy.a + lam2
    if den == 0:
        return np.inf
    return (lam1 + lam2 * economy.b) / den


def planner_solve(economy: EconomyModel, lam) -> PlannerSolution:
    """Interior optimum of ``sum_i lam_i U_i`` subject to ``x_1 + x_2 = 2``.

    The first-order condition ``sqrt(x1) / sqrt(2 - x1) = r`` with
    ``r = (lam1 + lam2 b) / (lam1 a + lam2)`` has a strictly increasing left
    side, so bisection finds the unique root.  ``r <= 0`` has no interior
    solution.
    """
    lam = np.asarray(lam, dtype=float)
    lam1, lam2 = lam
    num = lam1 + lam2 * economy.b
    den = lam1 * economy.a + lam2
    if num <= 0 or den <= 0:
        raise EconomyError(f"no interior planner optimum for lambda={lam.tolist()} "
                           f"(condition ratio {num:.4g}/{den:.4g} is not positive)")
    r = num / den
    S = economy.supply

    def lhs(t):
        return np.sqrt(t) / np.sqrt(S - t)

    lo, hi = 0.0, S
    # bisect to the floating-point limit (well below 1e-12); that keeps the
    # residual small where the left side is steep (x1 near 2)
    while True:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if lhs(mid) < r:
            lo = mid
        else:
            hi = mid
    x1 = 0.5 * (lo + hi)
    x = np.array([x1, S - x1])
    return PlannerSolution(lam, x, economy.B @ np.sqrt(x), float(r), float(lhs(x1) - r))


@dataclass
class EfficiencyAudit:
    ray: tuple            # (lam1, lam2) solving the planner condition at x1 = 1
    positive_weights: bool
    weights: np.ndarray | None
    grid_closest: float   # min |x1 - 1| over the lambda grid
    grid_hits: int
    lp_weights: np.ndarray | None  # lam >> 0 with lam B >> 0, for comparison
    improvement: PlannerSolution | None
    equilibrium: CompetitiveEquilibrium

    def to_json(self):
        return {"ray": list(self.ray), "positive_weights": self.positive_weights,
                "weights": None if self.weights is None else self.weights.tolist(),
                "grid_closest": self.grid_closest, "grid_hits": self.grid_hits,
                "lp_weights": None if self.lp_weights is None else self.lp_weights.tolist(),
                "improvement": None if self.improvement is None else self.improvement.to_json()}


def efficiency_audit(economy: EconomyModel, grid: int = 101,
                     improvement_weights=(1.0, 1.0)) -> EfficiencyAudit:
    """Can positive welfare weights make the equilibrium allocation planner-optimal?

    At ``x1 = 1`` the planner condition reads ``lam1 (1 - a) = lam2 (1 - b)``;
    positive solutions exist exactly when ``1 - a`` and ``1 - b`` are both
    positive.  A simplex grid of weights is scanned as a cross-check.  When
    no weights exist the planner optimum at ``improvement_weights`` is
    returned if it Pareto dominates the equilibrium.
    """
    eq = competitive_equilibrium(economy)
    a, b = economy.a, economy.b
    ca, cb = 1.0 - a, 1.0 - b  # lam1 * ca = lam2 * cb, solved by (cb, ca)
    if ca != 0:
        ray = (cb / ca, 1.0)
    elif cb != 0:
        ray = (1.0, 0.0)
    else:
        ray = (1.0, 1.0)
    positive = ca > 0 and cb > 0
    weights = np.array([cb, ca]) / (ca + cb) if positive else None

    closest, hits = np.inf, 0
    for k in range(1, grid - 1):
        lam = np.array([k / (grid - 1), 1 - k / (grid - 1)])
        try:
            sol = planner_solve(economy, lam)
        except EconomyError:
            continue
        d = abs(sol.x[0] - eq.x[0])
        closest = min(closest, d)
        hits += d <= 1e-8

    lp = welfare_weights(economy.B)
    improvement = None
    if not positive:
        try:
            sol = planner_solve(economy, improvement_weights)
        except EconomyError:
            sol = None
        if sol is not None and np.all(sol.goods_utilities > eq.goods_utilities):
            improvement = sol
    return EfficiencyAudit(ray, positive, weights, float(closest), int(hits),
                           None if lp is None else lp.weights, improvement, eq)


def weight_scan_csv(economy: EconomyModel, points: int = 99) -> str:
    """CSV ``lambda1,x1,u1,u2`` of planner optima for ``lambda = (l, 1 - l)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda1", "x1", "u1", "u2"])
    for k in range(1, points + 1):
        l1 = k / (points + 1)
        try:
            sol = planner_solve(economy, (l1, 1 - l1))
        except EconomyError:
            w.writerow([f"{l1:.12g}", "nan", "nan", "nan"])
            continue
        w.writerow([f"{l1:.12g}", f"{sol.x[0]:.12g}",
                    f"{sol.goods_utilities[0]:.12g}", f"{sol.goods_utilities[1]:.12g}"])
    return buf.getvalue()
