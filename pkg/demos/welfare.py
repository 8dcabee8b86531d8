"""Pareto search around equilibria of the shifting-attitude models, and
welfare weights for the four sign patterns of the linear model."""
import numpy as np

from affective import welfare as wf
from affective.equilibrium import find_parametric_equilibrium
from affective.model import builtin_model

for name in ["example3-pos", "example3-neg", "example3-mixed"]:
    m = builtin_model(name)
    eq = find_parametric_equilibrium(m)
    cert = wf.pareto_search(m, eq.x, eq.u)
    print(f"{name:15s} x*={np.round(eq.x, 5)} improved={cert.improved}")

# the same negative-quadrant equilibrium, judged against the whole box
full = builtin_model("example3")
eq = find_parametric_equilibrium(builtin_model("example3-neg"))
cert = wf.pareto_search(full, eq.x, eq.u)
print("negative-quadrant equilibrium on the full box: improved =", cert.improved,
      "witness", getattr(cert, "witness_x", None))

for a, b in [(0.5, 0.3), (0.5, -0.8), (-0.8, 0.5), (-0.5, -0.5)]:
    B = np.array([[1, a], [b, 1]]) / (1 - a * b)
    w = wf.welfare_weights(B)
    print(f"a={a:5} b={b:5} weights={np.round(w.weights, 4)} lambda B={np.round(w.weights @ B, 4)}")
