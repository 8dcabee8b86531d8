import csv
import io

import numpy as np
import pytest

from affective import reproduce as rp
from affective.model import builtin_model

NASH2 = np.array([0.24619733, 0.50378832])
NASH3 = np.array([0.7519679, 0.7519679])


def read(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float)


def surface(model, kind, center, half, res=21):
    rng = [center[0] - half, center[0] + half, center[1] - half, center[1] + half]
    head, data = read(rp.emit_plot_data(model, kind, rng, res))
    assert data[:, 3].all()
    Z = data[:, 2].reshape(res, res)
    step = 2 * half / (res - 1)
    c = res // 2
    H = np.array([[Z[c + 1, c] - 2 * Z[c, c] + Z[c - 1, c],
                   (Z[c + 1, c + 1] - Z[c + 1, c - 1] - Z[c - 1, c + 1] + Z[c - 1, c - 1]) / 4],
                  [0, Z[c, c + 1] - 2 * Z[c, c] + Z[c, c - 1]]]) / step**2
    H[1, 0] = H[0, 1]
    return Z, H


def test_reaction_curves_cross_at_nash(ex2):
    head, data = read(rp.emit_plot_data(ex2, "reaction-curves", resolution=200))
    assert head == ["y", "beta1", "x", "beta2"] and data.shape == (200, 4)
    step = 1.0 / 199
    # curve 1 is (beta1(y), y); curve 2 is (x, beta2(x))
    c1 = np.column_stack([data[:, 1], data[:, 0]])
    c2 = np.column_stack([data[:, 2], data[:, 3]])
    assert np.min(np.max(np.abs(c1 - NASH2), axis=1)) <= step
    assert np.min(np.max(np.abs(c2 - NASH2), axis=1)) <= step
    inner = (data[:, 0] > 0.01)
    np.testing.assert_allclose(data[inner, 1], rp.beta1(data[inner, 0]), atol=1e-7)
    np.testing.assert_allclose(data[inner, 3], rp.beta2(data[inner, 2]), atol=1e-7)


def test_spiteful_player_sits_on_a_saddle(ex2):
    _, H = surface(ex2, "surface:U1", NASH2, 0.02)
    ev = np.linalg.eigvalsh(H)
    assert ev[0] < 0 < ev[1]


def test_shifting_attitudes_peak(ex3):
    Z, H = surface(ex3, "surface:U1", NASH3, 0.02)
    assert np.all(np.linalg.eigvalsh(H) < 0)
    c = Z.shape[0] // 2
    assert Z[c, c] >= Z[c - 1:c + 2, c - 1:c + 2].max() - 1e-12


def test_welfare_surface_and_sentinel():
    m = builtin_model("example3")
    head, data = read(rp.emit_plot_data(m, "welfare-surface", resolution=5))
    assert head == ["x", "y", "W", "defined"] and data.shape == (25, 4)
    # no consistent profile anywhere: u1 = u2^2 + 1, u2 = u1
    from affective.model import load_model
    bad = load_model("players: 2\nvar 1: x in (0, 1)\nvar 2: y in (0, 1)\n"
                     "utility 1: u2^2 + 1 + 0*x\nutility 2: u1 + 0*y\n")
    with pytest.raises(ValueError):
        rp.emit_plot_data(bad, "surface:U1", resolution=3)


def test_partially_undefined_surface_marks_points():
    from affective.model import load_model
    # u1 = u2^2 + x - 0.5, u2 = u1 is solvable only for x <= 0.75
    m = load_model("players: 2\nvar 1: x in (0, 1)\nvar 2: y in (0, 1)\n"
                   "utility 1: u2^2 + x - 0.5\nutility 2: u1 + 0*y\n")
    _, data = read(rp.emit_plot_data(m, "surface:U1", resolution=9))
    assert 0 < data[:, 3].sum() < len(data)
    assert np.all(np.isnan(data[data[:, 3] == 0, 2]))


def test_unknown_kind():
    with pytest.raises(ValueError):
        rp.emit_plot_data(builtin_model("example2"), "surface:U3")


@pytest.mark.parametrize("example", ["linear-two-person", "nonseparable", "shifting-pos",
                                     "shifting-neg", "shifting-mixed"])
def test_reproductions_pass(example):
    rep = rp.reproduce(example)
    assert rep.passed, rep.table()


def test_shifting_neg_reports_quadrant_only_optimality():
    rep = rp.reproduce("shifting-neg")
    rows = {r.label: r for r in rep.rows}
    assert rows["Pareto witnesses in quadrant"].computed == 0
    assert rows["full-box Pareto witness found"].computed == 1


def test_economy_reproduction_rows():
    rows = {r.label: r for r in rp.reproduce("economy").rows}
    for label in ["x1 at equilibrium", "x2 at equilibrium", "u1 goods part", "u2 goods part",
                  "planner x1 (2r^2/(1+r^2))", "planner u1 (2-digit target)", "planner u2 (2-digit target)",
                  "weight ray lambda1/lambda2", "improvement dominates"]:
        assert rows[label].passed, label


def test_unknown_example():
    with pytest.raises(KeyError):
        rp.reproduce("nope")
