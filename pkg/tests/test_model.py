import numpy as np
import pytest

from affective.model import (ModelError, NonAffectiveReferenceError, affection_jacobian,
                             builtin_model, builtin_names, builtin_text, evaluate_v,
                             is_separable, load_model, residual)

from conftest import linear_model

TWO = """players: 2
var 1: x in (0, 1)
var 2: y in (0, 1)
utility 1: {u1}
utility 2: {u2}
"""


def doc(u1="x*(1 - x) - 2*x*u2", u2="y*(1 - y) + (1/8)*y*u1"):
    return TWO.format(u1=u1, u2=u2)


def test_load_nonseparable(ex2):
    assert ex2.n == 2
    assert [(a.lo, a.hi) for a in ex2.actions] == [(0.0, 1.0), (0.0, 1.0)]
    assert ex2.names == ("x", "y")


def test_other_players_action_rejected():
    with pytest.raises(NonAffectiveReferenceError) as info:
        load_model(doc(u1="x*(1 - x) + y"))
    assert info.value.variable == "y" and info.value.line == 4
    assert "non-affective" in str(info.value)


def test_own_utility_reference_rejected():
    with pytest.raises(NonAffectiveReferenceError) as info:
        load_model(doc(u1="x*(1 - x) + u1"))
    assert info.value.variable == "u1"


@pytest.mark.parametrize("text,line", [
    ("players: 2\nvar 1: x in (0, 1)\nvar 2: y in (0 1)\nutility 1: x\nutility 2: y\n", 3),
    ("players: 2\nvar 1: x in (1, 0)\nvar 2: y in (0, 1)\nutility 1: x\nutility 2: y\n", 2),
    ("players: 2\nvar 1: x in (0, 1)\nvar 2: y in (0, 1)\nutility 1: x +\nutility 2: y\n", 4),
    ("players: 2\nparam a: nan\nvar 1: x in (0, 1)\nvar 2: y in (0, 1)\nutility 1: x\nutility 2: y\n", 2),
])
def test_load_errors_carry_line(text, line):
    with pytest.raises(ModelError) as info:
        load_model(text)
    assert info.value.line == line


@pytest.mark.parametrize("text", [
    "var 1: x in (0, 1)\nutility 1: x\n",
    "players: 13\n",
    "players: 2\nvar 1: x in (0, 1)\nvar 2: y in (0, 1)\nutility 1: x\n",
    "players: 2\nvar 1: x in (0, 1)\nvar 2: x in (0, 1)\nutility 1: x\nutility 2: x\n",
    "players: 2\nvar 1: x in (0, 1)\nvar 2: y in (0, 1)\nutility 1: x*z\nutility 2: y\n",
])
def test_structural_errors(text):
    with pytest.raises(ModelError):
        load_model(text)


def test_infinite_bounds_and_comments():
    m = load_model("# comment\nplayers: 2\nvar 1: x in (-inf, inf)  # free\n"
                   "var 2: y in (0, inf)\nutility 1: -x^2 + u2\nutility 2: -y^2\n")
    assert m.actions[0].lo == -np.inf
    assert np.all(np.isfinite(m.window_box()))


def test_builtins_ship_and_reload():
    names = builtin_names()
    for name in ["example1.model", "example2.model", "example3.model", "example3-neg.model"]:
        assert name in names
        assert builtin_model(name).source == builtin_text(name)


def test_param_override():
    m = builtin_model("example1", a=0.5)
    assert m.params["a"] == 0.5
    J = affection_jacobian(m, [0.3, 0.3], [0, 0])
    assert J[0, 1] == 0.5


def test_evaluate_v_examples(ex2, ex3):
    np.testing.assert_allclose(evaluate_v(ex2, [0.5, 0.5], [0, 0]), [0.25, 0.25])
    m = builtin_model("example1")
    assert evaluate_v(m, [0.3, 0.6], [0.0, 0.0])[0] == pytest.approx(0.3 * 0.7)
    v = evaluate_v(ex3, [0.75197, 0.75197], [0.39377, 0.39377])
    np.testing.assert_allclose(v, [0.39377, 0.39377], atol=1e-4)


def test_residual_examples(ex2):
    r = residual(ex2, [0.24620, 0.50379], [0.06061, 0.25380])
    assert np.max(np.abs(r)) <= 5e-4
    m = linear_model(np.zeros((2, 2)))
    x = np.array([0.3, -0.4])
    np.testing.assert_allclose(residual(m, x, [1, 1]) - residual(m, x, [0, 0]), [1, 1])


def test_jacobian_closed_forms(ex2, ex3):
    rng = np.random.default_rng(3)
    for x, y in rng.uniform(0, 1, size=(10, 2)):
        np.testing.assert_allclose(affection_jacobian(ex2, [x, y], [0.1, 0.2]),
                                   [[0, -2 * x], [y / 8, 0]], atol=1e-15)
        np.testing.assert_allclose(affection_jacobian(ex3, [x, y], [0.1, 0.2]),
                                   [[0, x / 2], [y / 2, 0]], atol=1e-15)
    m = builtin_model("example1")
    for u in rng.normal(size=(5, 2)):
        np.testing.assert_array_equal(affection_jacobian(m, [0.2, 0.9], u), [[0, 2], [0.25, 0]])


def test_jacobian_batched_shape(ex2):
    X = np.random.default_rng(0).uniform(0, 1, size=(4, 3, 2))
    assert affection_jacobian(ex2, X, np.zeros(2)).shape == (4, 3, 2, 2)


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
def test_jacobian_matches_finite_differences(name):
    m = builtin_model(name)
    rng = np.random.default_rng(7)
    box = m.window_box()
    h = 1e-6
    for _ in range(200):
        x = rng.uniform(box[:, 0], box[:, 1])
        u = rng.uniform(-2, 2, size=2)
        J = affection_jacobian(m, x, u)
        assert np.all(np.diag(J) == 0.0)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            col = (evaluate_v(m, x, u + e) - evaluate_v(m, x, u - e)) / (2 * h)
            col[j] = 0.0
            np.testing.assert_allclose(J[:, j], col, rtol=1e-6, atol=1e-9)


def test_residual_affine_for_separable():
    rng = np.random.default_rng(11)
    for _ in range(20):
        A = rng.uniform(-2, 2, size=(3, 3))
        np.fill_diagonal(A, 0)
        m = linear_model(A)
        assert is_separable(m)
        x = rng.uniform(-1, 1, size=3)
        u = rng.normal(size=3) * 5
        lhs = residual(m, x, u) - residual(m, x, np.zeros(3))
        np.testing.assert_allclose(lhs, (np.eye(3) - A) @ u, atol=1e-12)


def test_is_separable(ex1, ex2, ex3):
    assert is_separable(ex1)
    assert not is_separable(ex2)
    assert not is_separable(ex3)
