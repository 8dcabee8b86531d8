"""Small dense linear algebra: eigenvalues and a two-phase simplex.

Matrices here are at most 12x12 and LPs have a handful of rows, so the code
favours clarity over speed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# root finding on the characteristic polynomial loses accuracy quickly with n
CHARPOLY_MAX = 4


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# eigenvalues


def hessenberg(A):
    """Upper Hessenberg form of ``A`` by Householder reflections (complex)."""
    H = np.array(A, dtype=complex)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        H[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, :])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
    return H


def _wilkinson(a, b, c, d):
    tr = a + d
    det = a * d - b * c
    disc = np.sqrt(tr * tr / 4 - det)
    m1, m2 = tr / 2 + disc, tr / 2 - disc
    return m1 if abs(m1 - d) < abs(m2 - d) else m2


def eigvals_qr(A, maxiter_per_eig: int = 200) -> np.ndarray:
    """Eigenvalues by Hessenberg reduction and Wilkinson-shifted QR sweeps.

    Works in complex arithmetic so that complex-conjugate pairs of a real
    matrix split without a double-shift step.  Raises
    :class:`ConvergenceError` when the iteration cap is hit.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("square matrix required")
    if n == 0:
        return np.zeros(0, dtype=complex)
    H = hessenberg(A)
    eps = np.finfo(float).eps
    scale = max(np.abs(H).max(), np.finfo(float).tiny)
    eigs = []
    hi = n - 1
    its = 0
    total = 0
    while hi >= 0:
        if hi == 0:
            eigs.append(H[0, 0])
            break
        l = hi
        while l > 0:
            s = abs(H[l, l]) + abs(H[l - 1, l - 1])
            if abs(H[l, l - 1]) <= eps * max(s, scale):
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            eigs.append(H[hi, hi])
            hi -= 1
            its = 0
            continue
        its += 1
        total += 1
        if total > maxiter_per_eig * n:
            raise ConvergenceError(f"QR iteration did not converge after {total} sweeps")
        if its % 11 == 10:
            # exceptional shift to break symmetric stalls
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * (1 + 1j)
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        B = H[l:hi + 1, l:hi + 1]
        m = B.shape[0]
        B -= mu * np.eye(m)
        rots = []
        for k in range(m - 1):
            x, y = B[k, k], B[k + 1, k]
            r = np.hypot(abs(x), abs(y))
            if r == 0:
                c, s = 1.0, 0.0
            else:
                c, s = x / r, y / r
            G = np.array([[np.conj(c), np.conj(s)], [-s, c]])
            B[k:k + 2, k:] = G @ B[k:k + 2, k:]
            rots.append(G)
        for k, G in enumerate(rots):
            top = min(k + 2, m - 1)
            B[:top + 1, k:k + 2] = B[:top + 1, k:k + 2] @ G.conj().T
        B += mu * np.eye(m)
        H[l:hi + 1, l:hi + 1] = B
    return np.array(eigs[::-1])


def charpoly(A) -> np.ndarray:
    """Characteristic polynomial coefficients (highest degree first).

    Faddeev-LeVerrier recursion; fine for the small sizes used here.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    M = np.zeros_like(A)
    I = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + coeffs[k - 1] * I
        coeffs[k] = -np.trace(A @ M) / k
    return coeffs


def eigvals_charpoly(A) -> np.ndarray:
    """Eigenvalues as polished roots of the characteristic polynomial."""
    c = charpoly(A)
    if len(c) == 1:
        return np.zeros(0, dtype=complex)
    roots = np.roots(c).astype(complex)
    dc = np.polyder(c)
    for _ in range(8):
        d = np.polyval(dc, roots)
        ok = d != 0
        step = np.zeros_like(roots)
        step[ok] = np.polyval(c, roots[ok]) / d[ok]
        roots = roots - step
    return roots


def spectral_radius(A, method: str = "qr") -> float:
    """Largest eigenvalue modulus of ``A``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    if A.shape[0] > 12:
        raise ValueError("matrices larger than 12x12 are not supported")
    if method == "charpoly" and A.shape[0] > CHARPOLY_MAX:
        raise ValueError(f"the characteristic-polynomial route is limited to n <= {CHARPOLY_MAX}")
    if A.size == 0:
        return 0.0
    if method == "qr":
        ev = eigvals_qr(A)
    elif method == "charpoly":
        ev = eigvals_charpoly(A)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(np.max(np.abs(ev)))


# ---------------------------------------------------------------------------
# linear programming


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    fun: float | None = None
    iterations: int = 0

    @property
    def success(self):
        return self.status == "optimal"


def _pivot(T, obj, r, j):
    T[r] /= T[r, j]
    for i in range(T.shape[0]):
        if i != r and T[i, j] != 0:
            T[i] -= T[i, j] * T[r]
    if obj[j] != 0:
        obj -= obj[j] * T[r]


def _run(T, obj, basis, ncols, tol, maxiter):
    """Primal simplex with Bland's rule on columns ``< ncols``."""
    it = 0
    while True:
        cand = np.nonzero(obj[:ncols] < -tol)[0]
        if cand.size == 0:
            return "optimal", it
        j = cand[0]
        col = T[:, j]
        pos = col > tol
        if not pos.any():
            return "unbounded", it
        ratios = np.full(col.shape, np.inf)
        ratios[pos] = T[pos, -1] / col[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + tol * (1 + abs(best)))[0]
        r = min(ties, key=lambda i: basis[i])
        _pivot(T, obj, r, j)
        basis[r] = j
        it += 1
        if it > maxiter:
            raise ConvergenceError("simplex iteration limit reached")


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
            tol: float = 1e-11, maxiter: int = 5000) -> LPResult:
    """Minimise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``.

    Dense tableau, two phases, Bland's anti-cycling rule.
    """
    c = np.asarray(c, dtype=float)
    nv = c.size
    A_ub = np.zeros((0, nv)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, nv)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    mu, me = A_ub.shape[0], A_eq.shape[0]
    m = mu + me
    nslack = mu
    ncols = nv + nslack + m  # originals, slacks, artificials
    T = np.zeros((m, ncols + 1))
    T[:mu, :nv] = A_ub
    T[:mu, nv:nv + mu] = np.eye(mu)
    T[:mu, -1] = b_ub
    T[mu:, :nv] = A_eq
    T[mu:, -1] = b_eq
    neg = T[:, -1] < 0
    T[neg] *= -1
    T[:, nv + nslack:ncols] = np.eye(m)
    basis = list(range(nv + nslack, ncols))

    # phase 1: minimise the sum of artificials
    obj = np.zeros(ncols + 1)
    obj[nv + nslack:ncols] = 1.0
    for r in range(m):
        obj -= T[r]
    _, it1 = _run(T, obj, basis, ncols, tol, maxiter)
    if -obj[-1] > 1e-9 * max(1.0, np.abs(T[:, -1]).max(initial=0.0)):
        return LPResult("infeasible", iterations=it1)

    # drive remaining artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= nv + nslack:
            row = T[r, :nv + nslack]
            nz = np.nonzero(np.abs(row) > tol)[0]
            if nz.size:
                _pivot(T, obj, r, nz[0])
                basis[r] = nz[0]
                keep.append(r)
        else:
            keep.append(r)
    T = np.hstack([T[keep, :nv + nslack], T[keep, -1:]])
    basis = [basis[r] for r in keep]

    # phase 2
    ncols2 = nv + nslack
    cost = np.zeros(ncols2 + 1)
    cost[:nv] = c
    obj = cost.copy()
    for r, b in enumerate(basis):
        obj -= cost[b] * T[r]
    status, it2 = _run(T, obj, basis, ncols2, tol, maxiter)
    if status != "optimal":
        return LPResult(status, iterations=it1 + it2)
    x = np.zeros(ncols2)
    for r, b in enumerate(basis):
        x[b] = T[r, -1]
    x = x[:nv]
    return LPResult("optimal", x=x, fun=float(c @ x), iterations=it1 + it2)
