"""Matrix conditions on the affection Jacobian.

* P-matrix test of ``I - J`` (every principal minor positive),
* spectral radius below one for ``J`` and all its principal submatrices,
* dominant diagonal of ``I - J`` with a positive weight vector,

together with the sign-reversal characterisation of P-matrices, which is
used both as a runtime fuzz check and as an independent test oracle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .linalg import linprog, spectral_radius
from .model import InteractionModel, affection_jacobian

TOL_MINOR = 1e-10
TOL_RHO = 1e-9
TOL_LP = 1e-9
MAX_DIM = 12


def principal_subsets(n):
    """Nonempty index subsets, by size then lexicographically."""
    for k in range(1, n + 1):
        yield from itertools.combinations(range(n), k)


def _check_dim(A):
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("square matrix required")
    if A.shape[-1] > MAX_DIM:
        raise ValueError(f"dimension {A.shape[-1]} exceeds the cap of {MAX_DIM}")
    return A


@dataclass
class PMatrixVerdict:
    is_p: bool
    witness: tuple | None = None   # first subset with det <= tol
    minor: float | None = None     # its determinant
    min_minor: float = np.inf
    marginal: bool = False         # failing minor within tol of zero

    def __bool__(self):
        return self.is_p


def principal_minors(A) -> dict:
    """``{S: det(A[S, S])}`` for every nonempty subset ``S`` (batched over leading axes)."""
    A = _check_dim(A)
    out = {}
    for S in principal_subsets(A.shape[-1]):
        idx = np.array(S)
        out[S] = np.linalg.det(A[..., idx[:, None], idx])
    return out


def is_p_matrix(A, tol: float = TOL_MINOR) -> PMatrixVerdict:
    """P-matrix test by LU determinants of every principal submatrix.

    No row or column permutation is applied before taking minors.
    """
    A = _check_dim(A)
    if A.ndim != 2:
        raise ValueError("single matrix expected; use principal_minors for batches")
    minors = principal_minors(A)
    lo = min(minors.values())
    for S, d in minors.items():
        if d <= tol:
            return PMatrixVerdict(False, tuple(i + 1 for i in S), float(d), float(lo),
                                  marginal=abs(d) <= tol)
    return PMatrixVerdict(True, min_minor=float(lo))


def reverses_sign(A, y, tol: float = 0.0) -> bool:
    """True when ``y_i (A y)_i <= tol`` for every ``i``."""
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        raise ValueError("y must be nonzero")
    return bool(np.all(y * (A @ y) <= tol))


def find_sign_reversal(A, tol: float = 1e-9):
    """Search for a nonzero ``y`` that ``A`` sign-reverses.

    Rows where ``y_i = 0`` impose nothing, so the search runs over supports
    ``S`` and sign patterns ``s`` on ``S``: the reversing vectors there form
    the cone ``{s_i y_i >= 0, s_i (A[S, S] y)_i <= 0}`` and an LP asks for a
    nonzero point.  ``y`` and ``-y`` behave alike, so the first sign is fixed.
    Returns the vector or ``None``; exact up to LP tolerance, hence an
    independent decision of the P property.
    """
    A = _check_dim(A)
    n = A.shape[0]
    for S in principal_subsets(n):
        idx = np.array(S)
        k = idx.size
        sub = A[np.ix_(idx, idx)]
        for rest in itertools.product((1.0, -1.0), repeat=k - 1):
            s = np.array((1.0,) + rest)
            # variables z = s * y_S >= 0
            M = (s[:, None] * sub) * s[None, :]
            A_ub = np.vstack([M, np.ones((1, k))])
            b_ub = np.concatenate([np.zeros(k), [1.0]])
            res = linprog(-np.ones(k), A_ub, b_ub)
            if res.success and -res.fun > tol:
                y = np.zeros(n)
                y[idx] = s * res.x
                # tight LP rows come back as +-1e-17, not exactly 0
                if reverses_sign(A, y, tol=1e-12 * max(1.0, np.abs(A).max())):
                    return y
    return None


def check_dominant_diagonal(A, tol: float = TOL_LP):
    """Weights ``h >= 0`` with ``h_i A_ii > sum_{j != i} h_j |A_ij|``, or ``None``.

    Maximises the smallest slack ``s`` with ``sum(h) = n``; the weights are
    returned only when ``s > tol``.
    """
    A = _check_dim(A)
    n = A.shape[0]
    if np.any(np.diag(A) <= 0):
        raise ValueError("dominant diagonal check needs a positive diagonal")
    D = -np.abs(A)
    np.fill_diagonal(D, np.diag(A))
    # variables (h, s_plus, s_minus); constraint s - (D h)_i <= 0
    A_ub = np.hstack([-D, np.ones((n, 1)), -np.ones((n, 1))])
    A_eq = np.hstack([np.ones((1, n)), np.zeros((1, 2))])
    c = np.zeros(n + 2)
    c[n], c[n + 1] = -1.0, 1.0
    res = linprog(c, A_ub, np.zeros(n), A_eq, [float(n)])
    if not res.success:
        raise RuntimeError(f"dominant diagonal LP failed: {res.status}")
    h = res.x[:n]
    slack = res.x[n] - res.x[n + 1]
    if slack > tol:
        return h
    return None


def diagonal_slack(A, h):
    """``min_i h_i A_ii - sum_{j != i} h_j |A_ij|``."""
    A = np.asarray(A, dtype=float)
    D = -np.abs(A)
    np.fill_diagonal(D, np.diag(A))
    return float(np.min(D @ np.asarray(h, dtype=float)))


# ---------------------------------------------------------------------------
# sampled reports


@dataclass
class ConditionReport:
    assumption: int
    samples: int
    verdict: str  # "holds-on-samples" | "fails"
    region: dict
    witness: dict | None = None
    extremes: dict = field(default_factory=dict)

    @property
    def holds(self):
        return self.verdict == "holds-on-samples"

    def to_json(self):
        out = {"assumption": self.assumption, "samples": self.samples,
               "verdict": self.verdict, "region": self.region,
               "extremes": self.extremes}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def sample_points(model: InteractionModel, count: int, u_box=(-10.0, 10.0), seed: int = 42):
    """Seeded ``(x, u)`` samples: ``x`` in the inset action box, ``u`` in ``u_box``."""
    rng = np.random.default_rng(seed)
    box = model.window_box()
    x = rng.uniform(box[:, 0], box[:, 1], size=(count, model.n))
    u = rng.uniform(u_box[0], u_box[1], size=(count, model.n))
    return x, u


def _region(model, u_box, seed):
    return {"x_box": model.window_box().tolist(), "u_box": list(u_box), "seed": seed,
            "note": "verdict covers the sampled region only"}


def check_assumption2(model: InteractionModel, samples: int = 1000, u_box=(-10.0, 10.0),
                      seed: int = 42, probes: int = 100) -> ConditionReport:
    """Sampled P-matrix check of ``I - J_x(u)``.

    Each positive verdict is fuzzed with random sign-reversal probes; a
    reversal there would contradict the P property and is raised as a bug.
    """
    x, u = sample_points(model, samples, u_box, seed)
    J = affection_jacobian(model, x, u)
    A = np.eye(model.n) - J
    minors = principal_minors(A)
    subsets = list(minors)
    table = np.stack([minors[S] for S in subsets], axis=1)  # (samples, subsets)
    min_minor = float(table.min())
    fail = table <= TOL_MINOR
    rng = np.random.default_rng(seed + 1)
    ok_rows = np.nonzero(~fail.any(axis=1))[0]
    if ok_rows.size and probes:
        Y = rng.normal(size=(ok_rows.size, probes, model.n))
        AY = np.einsum("kij,kpj->kpi", A[ok_rows], Y)
        rev = np.all(Y * AY <= 0, axis=-1)
        if rev.any():
            k, p = np.argwhere(rev)[0]
            raise AssertionError(
                f"sign reversal on a P-matrix at sample {ok_rows[k]}: y={Y[k, p].tolist()}")
    extremes = {"min_minor": min_minor}
    if fail.any():
        k = int(np.nonzero(fail.any(axis=1))[0][0])
        s = int(np.nonzero(fail[k])[0][0])
        d = float(table[k, s])
        witness = {"sample": k, "x": x[k].tolist(), "u": u[k].tolist(),
                   "subset": [i + 1 for i in subsets[s]], "minor": d,
                   "marginal": abs(d) <= TOL_MINOR}
        return ConditionReport(2, samples, "fails", _region(model, u_box, seed), witness, extremes)
    return ConditionReport(2, samples, "holds-on-samples", _region(model, u_box, seed),
                           None, extremes)


def sub_interaction_radii(J) -> dict:
    """``{S: rho(J[S, S])}`` over all nonempty subsets (singletons give 0)."""
    J = _check_dim(J)
    out = {}
    for S in principal_subsets(J.shape[0]):
        if len(S) == 1:
            out[S] = abs(float(J[S[0], S[0]]))
        else:
            idx = np.array(S)
            out[S] = spectral_radius(J[np.ix_(idx, idx)])
    return out


def check_assumption4(model: InteractionModel, samples: int = 1000, u_box=(-10.0, 10.0),
                      seed: int = 42) -> ConditionReport:
    """Sampled spectral-radius check on ``J`` and every sub-interaction."""
    x, u = sample_points(model, samples, u_box, seed)
    J = affection_jacobian(model, x, u)
    max_rho = 0.0
    witness = None
    for k in range(samples):
        radii = sub_interaction_radii(J[k])
        for S, rho in radii.items():
            max_rho = max(max_rho, rho)
            if witness is None and rho >= 1 - TOL_RHO:
                witness = {"sample": k, "x": x[k].tolist(), "u": u[k].tolist(),
                           "subset": [i + 1 for i in S], "rho": rho}
    extremes = {"max_rho": max_rho}
    verdict = "fails" if witness else "holds-on-samples"
    return ConditionReport(4, samples, verdict, _region(model, u_box, seed), witness, extremes)


def check_assumption5(model: InteractionModel, samples: int = 1000, u_box=(-10.0, 10.0),
                      seed: int = 42) -> ConditionReport:
    """Sampled dominant-diagonal check of ``I - J``."""
    x, u = sample_points(model, samples, u_box, seed)
    A = np.eye(model.n) - affection_jacobian(model, x, u)
    worst = np.inf
    witness = None
    for k in range(samples):
        h = check_dominant_diagonal(A[k])
        if h is None:
            witness = {"sample": k, "x": x[k].tolist(), "u": u[k].tolist(),
                       "statement": "no weight vector"}
            break
        worst = min(worst, diagonal_slack(A[k], h))
    extremes = {"min_lp_slack": None if witness else worst}
    verdict = "fails" if witness else "holds-on-samples"
    return ConditionReport(5, samples, verdict, _region(model, u_box, seed), witness, extremes)


CHECKS = {2: check_assumption2, 4: check_assumption4, 5: check_assumption5}
