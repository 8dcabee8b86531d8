"""Check the matrix conditions on a few built-in models and show the
model that satisfies the P-matrix test while its spectral radius exceeds 1."""
import numpy as np

from affective import conditions as cd
from affective.linalg import spectral_radius
from affective.model import affection_jacobian, builtin_model

for name in ["example1", "example2", "example3", "linear-explosive", "linear-unstable"]:
    m = builtin_model(name)
    verdicts = {k: check(m, samples=500).verdict for k, check in cd.CHECKS.items()}
    print(f"{name:18s}", verdicts)

J = affection_jacobian(builtin_model("linear-unstable"), np.full(2, 0.5), np.zeros(2))
print("rho (QR)       =", spectral_radius(J, "qr"))
print("rho (charpoly) =", spectral_radius(J, "charpoly"))
print("dominant-diagonal weights:", cd.check_dominant_diagonal(np.eye(2) - J))
print("sign reversal of I - J for ab = 2:", cd.find_sign_reversal([[1, -2], [-1, 1]]))
