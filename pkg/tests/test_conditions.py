import numpy as np
import pytest

from affective import conditions as cd
from affective.linalg import spectral_radius
from affective.model import affection_jacobian, builtin_model

from conftest import linear_model


def test_is_p_matrix_examples():
    v = cd.is_p_matrix([[1, 2], [0.25, 1]])
    assert v.is_p and v.min_minor == pytest.approx(0.5)
    assert cd.is_p_matrix(np.eye(4)).is_p
    v = cd.is_p_matrix([[1, 2], [1, 1]])
    assert not v.is_p and v.witness == (1, 2) and v.minor == pytest.approx(-1)


def test_marginal_minor_flagged():
    v = cd.is_p_matrix([[1, 1], [1, 1 + 1e-12]])
    assert not v.is_p and v.marginal


def test_no_transpositions():
    # a row swap turns this non-P matrix into a P-matrix; the test must see the raw one
    A = np.array([[0.1, 1.0], [1.0, 0.1]])
    assert not cd.is_p_matrix(A).is_p
    assert cd.is_p_matrix(A[::-1]).is_p


def test_dimension_cap():
    with pytest.raises(ValueError):
        cd.is_p_matrix(np.eye(13))


def test_reverses_sign_examples():
    assert not cd.reverses_sign(np.eye(2), [1, 1])
    assert cd.reverses_sign([[1, 2], [1, 1]], [1, -1])
    assert cd.reverses_sign(-np.eye(2), [1, 0])
    with pytest.raises(ValueError):
        cd.reverses_sign(np.eye(2), [0, 0])


def test_spectral_radius_of_two_cycle():
    rng = np.random.default_rng(2)
    for p, q in rng.uniform(-5, 5, size=(200, 2)):
        J = np.array([[0, p], [q, 0]])
        assert spectral_radius(J) == pytest.approx(np.sqrt(abs(p * q)), abs=1e-10)


def test_dominant_diagonal_examples():
    h = cd.check_dominant_diagonal(np.eye(2) - [[0, 0.5], [0.5, 0]])
    assert h is not None and cd.diagonal_slack(np.eye(2) - [[0, 0.5], [0.5, 0]], h) > 0
    A = np.array([[1, -2], [-0.25, 1]])
    h = cd.check_dominant_diagonal(A)
    assert h is not None
    assert h[0] > 2 * h[1] and h[1] > 0.25 * h[0]
    # (3, 1) from a hand check is feasible too
    assert cd.diagonal_slack(A, [3, 1]) > 0
    assert cd.check_dominant_diagonal([[1, -2], [1, 1]]) is None


def test_dominant_diagonal_needs_positive_diagonal():
    with pytest.raises(ValueError):
        cd.check_dominant_diagonal([[0, 1], [1, 1]])


def test_sub_interaction_radii():
    J = np.array([[0, 0.5, 0.2], [0.3, 0, 0.1], [0.4, 0.6, 0]])
    radii = cd.sub_interaction_radii(J)
    assert len(radii) == 7
    assert all(radii[(i,)] == 0 for i in range(3))
    assert radii[(0, 1)] == pytest.approx(np.sqrt(0.15))


# sampled checks

def test_assumption2_examples(ex2):
    assert cd.check_assumption2(ex2).holds
    bad = cd.check_assumption2(builtin_model("linear-explosive"))
    assert not bad.holds
    assert bad.witness["subset"] == [1, 2] and bad.witness["minor"] == pytest.approx(-1)
    assert cd.check_assumption2(builtin_model("linear-unstable")).holds


def test_assumption4_examples(ex3):
    rep = cd.check_assumption4(ex3)
    assert rep.holds and rep.extremes["max_rho"] < 0.5
    rep = cd.check_assumption4(builtin_model("linear-unstable"), samples=50)
    assert not rep.holds and rep.witness["rho"] == pytest.approx(np.sqrt(2), abs=1e-8)


def test_assumption5_examples(ex1, ex3):
    assert cd.check_assumption5(ex3, samples=200).holds
    assert cd.check_assumption5(ex1, samples=20).holds
    rep = cd.check_assumption5(builtin_model("linear-unstable"), samples=20)
    assert not rep.holds and rep.witness["statement"] == "no weight vector"


def test_reports_are_reproducible(ex2):
    a = cd.check_assumption2(ex2, samples=100, seed=5).to_json()
    b = cd.check_assumption2(ex2, samples=100, seed=5).to_json()
    assert a == b


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
def test_radius_and_diagonal_imply_p_on_samples(name):
    m = builtin_model(name)
    x, u = cd.sample_points(m, 1000)
    J = affection_jacobian(m, x, u)
    for k in range(1000):
        A = np.eye(2) - J[k]
        radii = cd.sub_interaction_radii(J[k])
        if max(radii.values()) < 1 - cd.TOL_RHO:
            assert cd.is_p_matrix(A).is_p
        if cd.check_dominant_diagonal(A) is not None:
            assert cd.is_p_matrix(A).is_p


def test_radius_and_diagonal_imply_p_on_random_matrices():
    rng = np.random.default_rng(17)
    for _ in range(300):
        n = int(rng.integers(2, 5))
        J = rng.uniform(-1, 1, size=(n, n))
        np.fill_diagonal(J, 0)
        A = np.eye(n) - J
        if max(cd.sub_interaction_radii(J).values()) < 1 - cd.TOL_RHO:
            assert cd.is_p_matrix(A).is_p
        if cd.check_dominant_diagonal(A) is not None:
            assert cd.is_p_matrix(A).is_p


def test_minor_test_agrees_with_sign_reversal_oracle():
    rng = np.random.default_rng(42)
    found = {True: 0, False: 0}
    for _ in range(1000):
        n = int(rng.integers(2, 5))
        A = rng.uniform(-1, 1, size=(n, n)) + np.diag(rng.uniform(0, 2, size=n))
        v = cd.is_p_matrix(A)
        if abs(v.min_minor) < 1e-6:
            continue  # too close to call for either route
        y = cd.find_sign_reversal(A)
        found[v.is_p] += 1
        if v.is_p:
            assert y is None
            Y = rng.normal(size=(200, n))
            assert not np.any(np.all(Y * (Y @ A.T) <= 0, axis=1))
        else:
            assert y is not None and cd.reverses_sign(A, y, tol=1e-12)
    assert found[True] > 100 and found[False] > 100


def test_linear_models_have_constant_verdicts():
    m = linear_model([[0, 0.5, 0.2], [0.3, 0, 0.1], [0.4, 0.6, 0]])
    assert cd.check_assumption2(m, samples=50).holds
    assert cd.check_assumption4(m, samples=50).holds
