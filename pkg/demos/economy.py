"""Two-agent exchange economy with affection: the competitive allocation and
a planner allocation that both agents prefer."""
from affective import economy as econ

e = econ.EconomyModel(2.0, 0.25)
ce = econ.competitive_equilibrium(e)
print("competitive:", ce.to_json())
audit = econ.efficiency_audit(e)
print("weights supporting the equilibrium:", audit.weights, "ray:", audit.ray)
print("planner improvement at equal weights:", audit.improvement.to_json())
print(econ.weight_scan_csv(e, points=9))
