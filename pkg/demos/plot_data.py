"""Write CSV data for the reaction curves and utility surfaces; any plotting
tool can draw them.  Usage: python demos/plot_data.py OUTDIR"""
import sys
from pathlib import Path

from affective.model import builtin_model
from affective.reproduce import emit_plot_data

out = Path(sys.argv[1] if len(sys.argv) > 1 else "plot-data")
out.mkdir(parents=True, exist_ok=True)
jobs = [("example2", "reaction-curves"), ("example2", "surface:U1"), ("example2", "surface:U2"),
        ("example3-pos", "surface:U1"), ("example3-pos", "welfare-surface")]
for name, kind in jobs:
    path = out / f"{name}-{kind.replace(':', '-')}.csv"
    path.write_text(emit_plot_data(builtin_model(name), kind, resolution=60))
    print("wrote", path)
