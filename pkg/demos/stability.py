"""Re-assessment dynamics u <- V_x(u) after a small shock: stable when the
spectral radius of the affection Jacobian is below 1, explosive above."""
import numpy as np

from affective import solver as sv
from affective.linalg import spectral_radius
from affective.model import affection_jacobian, builtin_model

x = np.array([0.4, 0.7])
for name, shock in [("example3", 1e-2), ("linear-unstable", 1e-6)]:
    m = builtin_model(name)
    u = sv.solve_consistency(m, x).u
    rho = spectral_radius(affection_jacobian(m, x, u))
    res = sv.picard_iterate(m, x, u + shock)
    print(f"{name:16s} rho={rho:.6f} verdict={res.verdict} steps={res.steps}")
