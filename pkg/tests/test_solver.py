import numpy as np
import pytest

from affective import solver as sv
from affective.conditions import check_assumption2
from affective.linalg import spectral_radius
from affective.model import affection_jacobian, builtin_model, load_model, residual

from conftest import linear_model, random_p_affection


def U_closed(x, y):
    """Induced utilities of the spiteful/sympathetic pair, solved by hand."""
    d = 8 + 2 * x * y
    return np.array([8 * x * ((1 - x) - 2 * y * (1 - y)) / d,
                     y * (8 * (1 - y) + x * (1 - x)) / d])


def test_linear_one_step_solve(ex1):
    x = np.array([0.3, 0.8])
    sol = sv.solve_consistency(ex1, x)
    f = x * (1 - x)
    want = np.linalg.solve(np.eye(2) - [[0, 2], [0.25, 0]], f)
    np.testing.assert_allclose(sol.u, want, atol=1e-14)
    assert sol.iterations == 1 and sol.method == "newton"


def test_nonseparable_matches_closed_form(ex2):
    sol = sv.solve_consistency(ex2, [0.24620, 0.50379])
    np.testing.assert_allclose(sol.u, [0.06061, 0.25380], atol=1e-4)
    rng = np.random.default_rng(0)
    for x in rng.uniform(0, 1, size=(50, 2)):
        np.testing.assert_allclose(sv.solve_consistency(ex2, x).u, U_closed(*x), atol=1e-12)


def test_already_consistent_guess_is_kept(ex2):
    x = np.array([0.4, 0.6])
    u = U_closed(*x)
    sol = sv.solve_consistency(ex2, x, guess=u, multistart=False)
    assert sol.iterations <= 1
    np.testing.assert_allclose(sol.u, u, atol=1e-15)


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
def test_multistart_agrees_under_p_property(name):
    m = builtin_model(name)
    assert check_assumption2(m, samples=200).holds
    rng = np.random.default_rng(1)
    box = m.window_box()
    for x in rng.uniform(box[:, 0], box[:, 1], size=(30, 2)):
        sol = sv.solve_consistency(m, x)
        assert sol.unique
        assert np.max(np.abs(residual(m, x, sol.u))) <= 1e-10


def test_multiple_limits_are_reported():
    # u1 = u2^2 - 2 + x, u2 = u1: two consistent profiles
    m = load_model("players: 2\nvar 1: x in (0, 1)\nvar 2: y in (0, 1)\n"
                   "utility 1: u2^2 - 2 + x\nutility 2: u1 + 0*y\n")
    sol = sv.solve_consistency(m, [0.5, 0.5])
    assert not sol.unique and len(sol.distinct) == 2


def test_no_consistent_profile_raises():
    # u1 = u2^2 + 1, u2 = u1 has no real solution
    m = load_model("players: 2\nvar 1: x in (0, 1)\nvar 2: y in (0, 1)\n"
                   "utility 1: u2^2 + 1 + 0*x\nutility 2: u1 + 0*y\n")
    with pytest.raises(sv.ConsistencyError) as info:
        sv.solve_consistency(m, [0.5, 0.5])
    assert info.value.best_residual > 0
    assert not sv.induced_game(m, [0.5, 0.5]).defined


def test_picard_examples(ex3):
    x = np.array([0.3, -0.6])
    u = sv.solve_consistency(ex3, x).u
    res = sv.picard_iterate(ex3, x, u + 0.01)
    assert res.verdict == "converged"
    np.testing.assert_allclose(res.final, u, atol=1e-11)
    unstable = builtin_model("linear-unstable")
    x = np.array([0.5, 0.5])
    u = sv.solve_consistency(unstable, x).u
    assert sv.picard_iterate(unstable, x, u + [1e-6, 0]).verdict == "diverged"
    res = sv.picard_iterate(ex3, x, sv.solve_consistency(ex3, x).u)
    assert res.verdict == "converged" and res.steps == 0


def test_picard_cycling_verdict():
    m = linear_model([[0, 1], [-1, 0]])  # eigenvalues +-i: neither contracts nor blows up
    res = sv.picard_iterate(m, [0.1, 0.2], [1.0, 0.0], kmax=200)
    assert res.verdict == "cycling" and res.steps == 200


@pytest.mark.parametrize("name", ["example2", "example3", "linear-unstable", "example1"])
def test_picard_follows_spectral_radius(name):
    m = builtin_model(name)
    x = np.array([0.4, 0.7])
    u = sv.solve_consistency(m, x).u
    rho = spectral_radius(affection_jacobian(m, x, u))
    verdict = sv.picard_iterate(m, x, u + 1e-6).verdict
    assert verdict == ("converged" if rho < 1 else "diverged")


def test_gradient_closed_form_linear(ex1):
    a, b = 2.0, 0.25
    for x, y in np.random.default_rng(4).uniform(0, 1, size=(10, 2)):
        g = sv.induced_game(ex1, [x, y]).grad
        assert g[0, 1] == pytest.approx(a * (1 - 2 * y) / (1 - a * b))
        assert g[0, 0] == pytest.approx((1 - 2 * x) / (1 - a * b))


def test_gradient_without_affection():
    m = linear_model(np.zeros((3, 3)))
    x = np.array([0.2, -0.5, 1.0])
    g = sv.induced_game(m, x).grad
    np.testing.assert_allclose(g, np.diag(-2 * x), atol=1e-15)


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
def test_gradient_matches_finite_differences(name):
    m = builtin_model(name)
    rng = np.random.default_rng(8)
    box = m.window_box()
    h = 1e-5
    for x in rng.uniform(box[:, 0] + h, box[:, 1] - h, size=(100, 2)):
        ev = sv.induced_game(m, x)
        np.testing.assert_allclose(residual(m, x, ev.U), 0, atol=1e-10)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd = (sv.solve_consistency(m, x + e).u - sv.solve_consistency(m, x - e).u) / (2 * h)
            assert np.all(np.abs(ev.grad[:, j] - fd) <= 1e-6 * np.maximum(1, np.abs(fd)))


def test_gradient_at_named_point(ex2):
    ev = sv.induced_game(ex2, [0.3, 0.5])
    h = 1e-5
    fd = np.column_stack([(U_closed(0.3 + h, 0.5) - U_closed(0.3 - h, 0.5)) / (2 * h),
                          (U_closed(0.3, 0.5 + h) - U_closed(0.3, 0.5 - h)) / (2 * h)])
    np.testing.assert_allclose(ev.grad, fd, atol=1e-6)
    assert ev.det == pytest.approx(1 + 0.3 * 0.5 / 4)
    assert not ev.near_singular


def test_separable_fast_path(ex1):
    g = sv.separable_induced(ex1)
    np.testing.assert_allclose(g.B, [[2, 4], [0.5, 2]], atol=1e-14)
    assert np.all(np.diag(g.B) > 0)
    X = np.random.default_rng(2).uniform(0, 1, size=(50, 2))
    U, ok = sv.induced_utilities(ex1, X)
    assert ok.all()
    np.testing.assert_allclose(g.U(X), U, atol=1e-10)


def test_separable_identity_and_singular():
    np.testing.assert_allclose(sv.separable_induced(builtin_model("example1", a=0, b=0)).B,
                               np.eye(2))
    with pytest.raises(sv.SingularAffectionError):
        sv.separable_induced(builtin_model("example1", a=2, b=0.5))
    with pytest.raises(sv.NotSeparableError):
        sv.separable_induced(builtin_model("example2"))


def test_separable_random_agrees_with_newton():
    rng = np.random.default_rng(9)
    for n in (2, 3, 4):
        for _ in range(5):
            J = random_p_affection(rng, n)
            m = linear_model(J)
            g = sv.separable_induced(m)
            np.testing.assert_allclose(g.J, J, atol=1e-15)
            X = rng.uniform(-1, 1, size=(20, n))
            U, ok = sv.induced_utilities(m, X)
            np.testing.assert_allclose(g.U(X), U, atol=1e-10)
            # diagonal of B is positive when I - J is a P-matrix
            assert np.all(np.diag(g.B) > 0)


def test_batch_matches_single(ex3):
    X = np.random.default_rng(3).uniform(-1, 1, size=(40, 2))
    U, ok = sv.induced_utilities(ex3, X)
    for k in range(0, 40, 7):
        np.testing.assert_allclose(U[k], sv.solve_consistency(ex3, X[k]).u, atol=1e-12)


def test_induced_json_shape(ex2):
    out = sv.induced_game(ex2, [0.3, 0.5]).to_json()
    assert set(out) == {"x", "defined", "U", "grad", "det_ImJ"}
