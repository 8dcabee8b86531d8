"""Consistency fixed points ``u = V_x(u)`` and the (locally) induced game.

The implicit-function gradient used throughout is

    dU_i/dx_j = B_ij * dV_j/dx_j,   B = (I - J_x(u_x))^{-1},

where ``dV_j/dx_j`` is player ``j``'s own-action derivative evaluated at
``(x_j, u_{-j})``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .model import (InteractionModel, affection_jacobian, evaluate_v, is_separable,
                    own_derivative, residual)

TOL_FIX = 1e-12
TOL_AGREE = 1e-8
SINGULAR_DET = 1e-8


class ConsistencyError(RuntimeError):
    def __init__(self, message, best_residual=None, det=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.det = det


class NotSeparableError(ValueError):
    pass


class SingularAffectionError(ZeroDivisionError):
    pass


@dataclass
class ConsistencySolution:
    u: np.ndarray
    residual: float
    iterations: int
    method: str  # "newton" | "picard" | "closed-form"
    converged: bool = True
    distinct: list = field(default_factory=list)  # limits from the multi-start

    @property
    def unique(self):
        return len(self.distinct) <= 1


def _norm(F):
    return np.max(np.abs(F), axis=-1)


def _solve(A, b):
    """Batched ``A x = b`` that tolerates singular members (returned as NaN)."""
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(b.shape, np.nan)
        flat_A = A.reshape(-1, *A.shape[-2:])
        flat_b = b.reshape(-1, b.shape[-1])
        flat_o = out.reshape(-1, b.shape[-1])
        for k in range(flat_A.shape[0]):
            try:
                flat_o[k] = np.linalg.solve(flat_A[k], flat_b[k])
            except np.linalg.LinAlgError:
                pass
        return out


def newton_batch(model: InteractionModel, X, U0, tol: float = TOL_FIX, maxiter: int = 60,
                 halvings: int = 30):
    """Damped Newton on ``F(u) = u - V_x(u)`` for a batch of profiles.

    ``X`` and ``U0`` have shape ``(m, n)``.  Returns ``(U, resid, iters,
    converged)``; points where the expressions leave their domain or
    ``I - J`` is singular simply fail to converge.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.array(np.broadcast_to(U0, X.shape), dtype=float)
    n = model.n
    I = np.eye(n)
    F = residual(model, X, U, strict=False)
    r = _norm(F)
    r = np.where(np.isfinite(r), r, np.inf)
    iters = np.zeros(X.shape[0], dtype=int)
    active = r > tol
    for _ in range(maxiter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        Xa, Ua, Fa, ra = X[idx], U[idx], F[idx], r[idx]
        J = affection_jacobian(model, Xa, Ua, strict=False)
        step = _solve(I - J, -Fa)
        bad = ~np.all(np.isfinite(step), axis=-1)
        step[bad] = 0.0
        t = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        Unew, Fnew, rnew = Ua.copy(), Fa.copy(), ra.copy()
        for _h in range(halvings + 1):
            todo = ~accepted & ~bad
            if not todo.any():
                break
            Ut = Ua[todo] + t[todo, None] * step[todo]
            Ft = residual(model, Xa[todo], Ut, strict=False)
            rt = _norm(Ft)
            rt = np.where(np.isfinite(rt), rt, np.inf)
            good = rt < ra[todo]
            sel = np.nonzero(todo)[0][good]
            Unew[sel], Fnew[sel], rnew[sel] = Ut[good], Ft[good], rt[good]
            accepted[sel] = True
            t[todo & ~accepted] *= 0.5
        U[idx], F[idx], r[idx] = Unew, Fnew, rnew
        iters[idx] += 1
        # stagnated points (no accepted step) stop here
        active[idx] = accepted & (rnew > tol)
    return U, r, iters, r <= tol


def picard_damped(model, x, u0, steps: int = 5000, damping: float = 0.5, tol: float = TOL_FIX):
    """``u <- u + damping (V_x(u) - u)``; fallback when Newton stalls."""
    u = np.asarray(u0, dtype=float).copy()
    for k in range(steps):
        with np.errstate(all="ignore"):
            v = evaluate_v(model, x, u, strict=False)
        if not np.all(np.isfinite(v)):
            break
        F = u - v
        if np.max(np.abs(F)) <= tol:
            return u, float(np.max(np.abs(F))), k, True
        u = u - damping * F
        if np.max(np.abs(u)) > 1e12:
            break
    F = residual(model, x, u, strict=False)
    r = float(np.max(np.abs(F))) if np.all(np.isfinite(F)) else np.inf
    return u, r, steps, r <= tol


def _single(model, x, guess, tol):
    U, r, it, ok = newton_batch(model, x[None], np.asarray(guess, dtype=float)[None], tol)
    if ok[0]:
        return U[0], float(r[0]), int(it[0]), "newton", True
    u, rp, k, okp = picard_damped(model, x, U[0] if np.isfinite(r[0]) else guess, tol=tol)
    if okp:
        return u, rp, int(it[0]) + k, "picard", True
    best = (U[0], float(r[0])) if r[0] <= rp else (u, rp)
    return best[0], best[1], int(it[0]) + k, "newton", False


def default_guess(model, x):
    """One forward sweep from zero, ``V_x(0)``."""
    v = evaluate_v(model, x, np.zeros(model.n), strict=False)
    return np.where(np.isfinite(v), v, 0.0)


def solve_consistency(model: InteractionModel, x, guess=None, tol: float = TOL_FIX,
                      multistart: bool = True, seed: int = 42) -> ConsistencySolution:
    """Solve ``u = V_x(u)`` by damped Newton with a Picard fallback.

    With ``multistart`` the solve is repeated from ``0``, ``V_x(0)`` and four
    seeded random points; every distinct limit (beyond 1e-8) is recorded in
    ``distinct`` rather than discarded.
    """
    x = np.asarray(x, dtype=float)
    if guess is None:
        guess = default_guess(model, x)
    guess = np.asarray(guess, dtype=float)
    u, r, it, method, ok = _single(model, x, guess, tol)
    if not multistart:
        if not ok:
            raise ConsistencyError(f"no consistent utilities at x={x.tolist()}", r)
        return ConsistencySolution(u, r, it, method, True, [u])
    rng = np.random.default_rng(seed)
    v0 = default_guess(model, x)
    scale = 1.0 + np.max(np.abs(v0))
    starts = [np.zeros(model.n), v0] + [v0 + scale * rng.normal(size=model.n) for _ in range(4)]
    limits = [u] if ok else []
    for s in starts:
        us, rs, _, _, oks = _single(model, x, s, tol)
        if oks and not any(np.max(np.abs(us - l)) <= TOL_AGREE for l in limits):
            limits.append(us)
    if not ok:
        if not limits:
            raise ConsistencyError(f"no consistent utilities at x={x.tolist()}", r)
        u = limits[0]
        r = float(np.max(np.abs(residual(model, x, u))))
        method = "newton"
    return ConsistencySolution(u, r, it, method, True, limits)


def induced_utilities(model: InteractionModel, X, tol: float = TOL_FIX):
    """Batch version of the induced game: ``(U, defined)`` for ``X`` of shape ``(m, n)``.

    Tries Newton from ``V_x(0)`` and then from ``0``; undefined points are NaN.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m, n = X.shape
    g = evaluate_v(model, X, np.zeros((m, n)), strict=False)
    g = np.where(np.isfinite(g), g, 0.0)
    U, r, _, ok = newton_batch(model, X, g, tol)
    if not ok.all():
        idx = np.nonzero(~ok)[0]
        U2, r2, _, ok2 = newton_batch(model, X[idx], np.zeros((idx.size, n)), tol)
        U[idx[ok2]] = U2[ok2]
        ok[idx[ok2]] = True
    U[~ok] = np.nan
    return U, ok


# ---------------------------------------------------------------------------
# Picard iteration


@dataclass
class PicardResult:
    trajectory: np.ndarray
    verdict: str  # "converged" | "diverged" | "cycling"
    steps: int

    @property
    def final(self):
        return self.trajectory[-1]


def picard_iterate(model: InteractionModel, x, u0, kmax: int = 10000,
                   tol: float = 1e-12, blowup: float = 1e8) -> PicardResult:
    """Undamped re-assessment ``u <- V_x(u)`` from ``u0``."""
    u = np.asarray(u0, dtype=float).copy()
    traj = [u.copy()]
    with np.errstate(all="ignore"):
        v = evaluate_v(model, x, u, strict=False)
    if np.all(np.isfinite(v)) and np.max(np.abs(v - u)) <= tol:
        return PicardResult(np.array(traj), "converged", 0)
    for k in range(1, kmax + 1):
        with np.errstate(all="ignore"):
            v = evaluate_v(model, x, u, strict=False)
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > blowup:
            traj.append(v)
            return PicardResult(np.array(traj), "diverged", k)
        du = np.max(np.abs(v - u))
        u = v
        traj.append(u.copy())
        if du <= tol:
            return PicardResult(np.array(traj), "converged", k)
    return PicardResult(np.array(traj), "cycling", kmax)


# ---------------------------------------------------------------------------
# induced game


@dataclass
class InducedGameEval:
    x: np.ndarray
    defined: bool
    U: np.ndarray | None = None
    grad: np.ndarray | None = None  # grad[i, j] = dU_i/dx_j
    det: float | None = None        # det(I - J_x(u_x))
    near_singular: bool = False
    solution: ConsistencySolution | None = None

    def to_json(self):
        return {"x": self.x.tolist(), "defined": self.defined,
                "U": None if self.U is None else self.U.tolist(),
                "grad": None if self.grad is None else self.grad.tolist(),
                "det_ImJ": self.det}


def induced_gradient(model: InteractionModel, x, u):
    """``(grad, det)`` from the implicit-function formula at a consistent ``(x, u)``."""
    J = affection_jacobian(model, x, u)
    A = np.eye(model.n) - J
    det = float(np.linalg.det(A))
    B = np.linalg.inv(A)
    d = own_derivative(model, x, u)
    return B * d[None, :], det


def induced_game(model: InteractionModel, x, guess=None, multistart: bool = False,
                 seed: int = 42) -> InducedGameEval:
    """Evaluate the locally induced game and its gradient at ``x``.

    A point where no consistent utility profile is found is reported with
    ``defined=False`` instead of raising.
    """
    x = np.asarray(x, dtype=float)
    try:
        sol = solve_consistency(model, x, guess, multistart=multistart, seed=seed)
    except ConsistencyError:
        return InducedGameEval(x, False)
    try:
        grad, det = induced_gradient(model, x, sol.u)
    except np.linalg.LinAlgError:
        return InducedGameEval(x, True, sol.u, None, 0.0, True, sol)
    return InducedGameEval(x, True, sol.u, grad, det, abs(det) < SINGULAR_DET, sol)


@dataclass
class SeparableGame:
    """Induced game ``U(x) = B f(x)`` of a linearly separable model."""

    J: np.ndarray
    B: np.ndarray
    base: tuple  # base utilities f_i as expressions in x_i
    model: InteractionModel

    def base_values(self, X):
        X = np.asarray(X, dtype=float)
        env = {name: X[..., k] for k, name in enumerate(self.model.names)}
        shape = X.shape[:-1]
        return np.stack([np.broadcast_to(ex.evaluate(f, env, strict=False), shape)
                         for f in self.base], axis=-1)

    def U(self, X):
        return self.base_values(X) @ self.B.T


def separable_induced(model: InteractionModel) -> SeparableGame:
    """Closed-form induced game for linear separable affection.

    Raises :class:`NotSeparableError` when some ``dV_i/du_j`` is not constant
    and :class:`SingularAffectionError` when ``I - J`` is singular.
    """
    if not is_separable(model):
        raise NotSeparableError("affection is not linearly separable")
    n = model.n
    J = np.array([[ex.evaluate(model.dV_du[i][j], {}) for j in range(n)] for i in range(n)])
    A = np.eye(n) - J
    det = np.linalg.det(A)
    if abs(det) < 1e-12:
        raise SingularAffectionError(f"I - J is singular (det = {det:.3g})")
    B = np.linalg.inv(A)
    zero = {name: ex.ZERO for name in model.utility_names}
    base = tuple(ex.substitute(V, zero) for V in model.utilities)
    return SeparableGame(J, B, base, model)
