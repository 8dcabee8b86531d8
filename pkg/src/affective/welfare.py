"""Pareto certificates, welfare weights and the weighted welfare function."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import linprog
from .model import InteractionModel, residual
from .solver import induced_utilities

TOL_IMPROVE = 1e-7
TOL_WEIGHTS = 1e-9
FULL_GRID_MAX_N = 3
RANDOM_POINTS = 100_000


def action_grid(model: InteractionModel, per_axis: int = 64, seed: int = 42):
    """Full product grid over the inset box for small ``n``, seeded random points otherwise."""
    box = model.window_box()
    if model.n <= FULL_GRID_MAX_N:
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in box]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)
    rng = np.random.default_rng(seed)
    return rng.uniform(box[:, 0], box[:, 1], size=(RANDOM_POINTS, model.n))


def dominates(u_new, u_ref, tol: float = TOL_IMPROVE):
    """``u_new >= u_ref`` everywhere and ``> u_ref + tol`` somewhere (batched)."""
    u_new = np.asarray(u_new, dtype=float)
    weak = np.all(u_new >= u_ref, axis=-1)
    strict = np.any(u_new > np.asarray(u_ref) + tol, axis=-1)
    return weak & strict


@dataclass
class ParetoCertificate:
    x_ref: np.ndarray
    u_ref: np.ndarray
    per_axis: int
    points: int
    consistent_points: int
    improved: bool
    witness_x: np.ndarray | None = None
    witness_u: np.ndarray | None = None
    # average-utility comparison, kept apart from Pareto dominance
    best_average: float | None = None
    best_average_x: np.ndarray | None = None

    @property
    def outcome(self):
        return "improvement-found" if self.improved else "no-improvement-found"

    def to_json(self):
        out = {"x": self.x_ref.tolist(), "u": self.u_ref.tolist(),
               "grid": {"per_axis": self.per_axis, "points": self.points},
               "consistent_points": self.consistent_points, "outcome": self.outcome,
               "average": {"reference": float(np.mean(self.u_ref)),
                           "grid_best": self.best_average,
                           "grid_best_x": None if self.best_average_x is None
                           else self.best_average_x.tolist()}}
        if self.improved:
            out["witness"] = {"x": self.witness_x.tolist(), "u": self.witness_u.tolist()}
        return out


def pareto_search(model: InteractionModel, x, u, per_axis: int = 64, seed: int = 42,
                  tol: float = TOL_IMPROVE, chunk: int = 65536) -> ParetoCertificate:
    """Look for a consistent profile that Pareto improves on ``(x, u)``.

    Grid points where the induced game is undefined are skipped.  The first
    witness in grid order is returned.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.max(np.abs(residual(model, x, u))) > 1e-8:
        raise ValueError("reference profile is not consistent")
    X = action_grid(model, per_axis, seed)
    consistent = 0
    best_avg, best_avg_x = -np.inf, None
    witness = None
    for start in range(0, X.shape[0], chunk):
        Xc = X[start:start + chunk]
        U, ok = induced_utilities(model, Xc)
        consistent += int(ok.sum())
        avg = np.where(ok, np.nan_to_num(U.mean(axis=-1), nan=-np.inf), -np.inf)
        k = int(np.argmax(avg))
        if avg[k] > best_avg:
            best_avg, best_avg_x = float(avg[k]), Xc[k].copy()
        if witness is None:
            hit = ok & dominates(np.where(ok[:, None], U, -np.inf), u, tol)
            if hit.any():
                k = int(np.argmax(hit))
                witness = (Xc[k].copy(), U[k].copy())
    cert = ParetoCertificate(x, u, per_axis, X.shape[0], consistent, witness is not None,
                             best_average=best_avg if best_avg_x is not None else None,
                             best_average_x=best_avg_x)
    if witness is not None:
        cert.witness_x, cert.witness_u = witness
    return cert


@dataclass
class WelfareWeights:
    weights: np.ndarray
    slack: float
    B: np.ndarray

    def verify(self):
        """Independent recheck: strictly positive weights and weighted columns."""
        lam = self.weights
        return bool(np.min(lam) > 0 and np.min(lam @ self.B) > 0)


def welfare_weights(B, tol: float = TOL_WEIGHTS):
    """Weights ``lam >> 0`` with ``lam @ B >> 0`` and ``sum(lam) = 1``, or ``None``.

    Solves ``max t`` s.t. ``lam_i >= t``, ``(lam B)_j >= t``; weights are
    returned only when ``t > tol`` and they pass :meth:`WelfareWeights.verify`.
    """
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    if B.shape != (n, n) or n > 12:
        raise ValueError("square matrix of size <= 12 required")
    # variables (lam, t_plus, t_minus); rows t - lam_i <= 0 and t - (lam B)_j <= 0
    tcol = np.hstack([np.ones((2 * n, 1)), -np.ones((2 * n, 1))])
    A_ub = np.hstack([np.vstack([-np.eye(n), -B.T]), tcol])
    A_eq = np.hstack([np.ones((1, n)), np.zeros((1, 2))])
    c = np.zeros(n + 2)
    c[n], c[n + 1] = -1.0, 1.0
    res = linprog(c, A_ub, np.zeros(2 * n), A_eq, [1.0])
    if not res.success:
        raise RuntimeError(f"welfare weight LP failed: {res.status}")
    lam = res.x[:n]
    t = res.x[n] - res.x[n + 1]
    if t <= tol:
        return None
    w = WelfareWeights(lam, float(t), B)
    return w if w.verify() else None


@dataclass
class WelfareEval:
    weights: np.ndarray
    x: np.ndarray
    value: float
    grid_max: float
    grid_argmax: np.ndarray
    gap: float  # grid_max - value

    def to_json(self):
        return {"lambda": self.weights.tolist(), "x": self.x.tolist(), "W": self.value,
                "grid_max": self.grid_max, "grid_argmax": self.grid_argmax.tolist(),
                "gap": self.gap}


def welfare_value(model: InteractionModel, lam, x, per_axis: int = 64, seed: int = 42):
    """``W = sum_i lam_i U_i(x)`` and its maximum over the action grid."""
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    U, ok = induced_utilities(model, x[None])
    if not ok[0]:
        raise ValueError(f"induced game undefined at x={x.tolist()}")
    value = float(U[0] @ lam)
    X = action_grid(model, per_axis, seed)
    UG, okg = induced_utilities(model, X)
    W = np.where(okg, UG @ lam, -np.inf)
    k = int(np.argmax(W))
    return WelfareEval(lam, x, value, float(W[k]), X[k], float(W[k] - value))


def grid_cell(model: InteractionModel, per_axis: int = 64):
    box = model.window_box()
    return (box[:, 1] - box[:, 0]) / (per_axis - 1)


__all__ = ["ParetoCertificate", "WelfareWeights", "WelfareEval", "action_grid", "dominates",
           "grid_cell", "pareto_search", "welfare_value", "welfare_weights"]
