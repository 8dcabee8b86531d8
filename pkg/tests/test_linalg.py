import numpy as np
import pytest
from scipy.optimize import linprog as scipy_linprog

from affective.linalg import (ConvergenceError, charpoly, eigvals_charpoly, eigvals_qr,
                              hessenberg, linprog, spectral_radius)


def test_hessenberg_is_similar():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(6, 6))
    H = hessenberg(A)
    assert np.allclose(np.tril(H, -2), 0)
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(H)),
                               np.sort_complex(np.linalg.eigvals(A)), atol=1e-10)


def test_qr_eigenvalues_match_lapack():
    rng = np.random.default_rng(1)
    for _ in range(300):
        n = int(rng.integers(1, 13))
        A = rng.normal(size=(n, n))
        got = list(eigvals_qr(A))
        want = np.linalg.eigvals(A)
        tol = 1e-8 * max(1, np.abs(want).max())
        for w in want:
            k = int(np.argmin(np.abs(np.array(got) - w)))
            assert abs(got.pop(k) - w) <= tol


def test_charpoly_of_companion():
    c = charpoly(np.array([[0.0, 2.0], [-1.0, 0.0]]))
    np.testing.assert_allclose(c, [1.0, 0.0, 2.0])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_two_routes_agree(n):
    rng = np.random.default_rng(n)
    for _ in range(250):
        A = rng.normal(size=(n, n))
        assert abs(spectral_radius(A, "qr") - spectral_radius(A, "charpoly")) <= 1e-8


def test_spectral_radius_examples():
    x = y = 0.5
    assert spectral_radius(np.array([[0, -2 * x], [y / 8, 0]])) == pytest.approx(0.25, abs=1e-12)
    assert spectral_radius(np.zeros((3, 3))) == 0.0
    assert spectral_radius(np.array([[0.0, 2.0], [-1.0, 0.0]])) == pytest.approx(np.sqrt(2), abs=1e-12)


def test_defective_and_repeated():
    J = np.array([[2.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 2.0]])
    assert spectral_radius(J) == pytest.approx(2.0, abs=1e-8)
    assert spectral_radius(J, "charpoly") == pytest.approx(2.0, abs=1e-5)


def test_size_cap_and_bad_input():
    with pytest.raises(ValueError):
        spectral_radius(np.eye(13))
    with pytest.raises(ValueError):
        spectral_radius(np.eye(5), "charpoly")
    with pytest.raises(ValueError):
        spectral_radius(np.ones((2, 3)))


def test_charpoly_route_roots():
    A = np.diag([1.0, -3.0, 0.5])
    np.testing.assert_allclose(np.sort(eigvals_charpoly(A).real), [-3.0, 0.5, 1.0], atol=1e-10)


# simplex against scipy's HiGHS

def test_linprog_simple():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    res = linprog([-1, -1], [[1, 2], [3, 1]], [4, 6])
    assert res.success
    np.testing.assert_allclose(res.x, [1.6, 1.2])
    assert res.fun == pytest.approx(-2.8)


def test_linprog_infeasible_and_unbounded():
    assert linprog([1, 1], A_eq=[[1, 1]], b_eq=[-1]).status == "infeasible"
    assert linprog([-1, 0], [[0, 1]], [1]).status == "unbounded"


def test_linprog_matches_scipy():
    rng = np.random.default_rng(5)
    for _ in range(300):
        nv = int(rng.integers(2, 6))
        mu = int(rng.integers(1, 6))
        me = int(rng.integers(0, 3))
        c = rng.normal(size=nv)
        A_ub = rng.normal(size=(mu, nv))
        b_ub = rng.normal(size=mu) + 0.5
        A_eq = rng.normal(size=(me, nv)) if me else None
        b_eq = rng.normal(size=me) if me else None
        ours = linprog(c, A_ub, b_ub, A_eq, b_eq)
        ref = scipy_linprog(c, A_ub, b_ub, A_eq, b_eq, bounds=(0, None), method="highs")
        status = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
        assert ours.status == status
        if status == "optimal":
            assert ours.fun == pytest.approx(ref.fun, abs=1e-7 * max(1, abs(ref.fun)))
            assert np.all(ours.x >= -1e-9)
            assert np.all(A_ub @ ours.x <= b_ub + 1e-8)
