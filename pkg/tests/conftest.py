import numpy as np
import pytest

from affective.conditions import sub_interaction_radii
from affective.model import builtin_model, load_model

EXAMPLE_MODELS = ["example1", "example2", "example3"]


@pytest.fixture(scope="session")
def ex1():
    return builtin_model("example1")


@pytest.fixture(scope="session")
def ex2():
    return builtin_model("example2")


@pytest.fixture(scope="session")
def ex3():
    return builtin_model("example3")


def linear_model(A, f_peaks=None, curv=None, box=(-2.0, 2.0)):
    """Linearly separable model ``V_i = c_i x_i (p_i - x_i) + sum_j A_ij u_j``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    f_peaks = np.zeros(n) if f_peaks is None else f_peaks
    curv = np.ones(n) if curv is None else curv
    lines = [f"players: {n}"]
    for i in range(n):
        lines.append(f"var {i + 1}: x{i + 1} in ({box[0]}, {box[1]})")
    for i in range(n):
        terms = [f"{float(curv[i])!r}*x{i + 1}*({2 * float(f_peaks[i])!r} - x{i + 1})"]
        terms += [f"({float(A[i, j])!r})*u{j + 1}" for j in range(n) if j != i and A[i, j] != 0]
        lines.append(f"utility {i + 1}: " + " + ".join(terms))
    return load_model("\n".join(lines))


def random_p_affection(rng, n, scale=0.9):
    """Zero-diagonal ``J`` whose sub-interactions all have spectral radius below ``scale``.

    Bounding only the full ``rho(J)`` is not enough for ``I - J`` to be a P-matrix.
    """
    J = rng.uniform(-1, 1, size=(n, n))
    np.fill_diagonal(J, 0.0)
    rho = max(sub_interaction_radii(J).values())
    return J * (scale * rng.uniform(0.2, 1.0) / rho) if rho > 0 else J
