"""Find the equilibrium of the spite/sympathy model and compare it with the
closed-form best replies.  The spiteful player's induced utility is not
concave at the equilibrium: we print the sampled Hessian to show the saddle."""
import numpy as np

from affective.equilibrium import find_parametric_equilibrium, local_dominance_check
from affective.model import builtin_model
from affective.reproduce import beta1, beta2

m = builtin_model("example2")
eq = find_parametric_equilibrium(m)
print("equilibrium x:", eq.x, "u:", eq.u, "flags:", eq.flags)
print("beta1(y*) - x* =", beta1(eq.x[1]) - eq.x[0])
print("beta2(x*) - y* =", beta2(eq.x[0]) - eq.x[1])

dom = local_dominance_check(m, eq)
print("cross partials d2U_i/dx_i dx_j:\n", np.round(dom.cross, 6))
