"""Writing the model for an external MIP solver, and a small experiment sweep."""
import tempfile
from pathlib import Path

from evmod.bench import Sweep, emit_results, run_exp2
from evmod.generate import GenConfig, generate
from evmod.offline.lpfile import export_lp, read_lp
from evmod.offline.milp import solve_milp
from evmod.offline.mip import build_model

out = Path(tempfile.mkdtemp())

s = generate(GenConfig(seed=2, num_evs=3, num_customers=5, num_time_points=12, num_stations=4))
m = build_model(s)
print(len(m.variables), "variables;", dict(sorted(m.count_by_tag().items())))
export_lp(m, out / "small.lp")
print((out / "small.lp").read_text()[:400])

# The file reads back to the same model, and HiGHS solves it
again = read_lp(out / "small.lp")
print("round trip equal:", again == m, " MILP optimum:", solve_milp(again).objective)

# Runtime sweep: mean optimal time vs number of customers, quadratic fit
res = run_exp2(Sweep(customers=(10, 20, 30, 40), seeds=tuple(range(5))))
for f in res.fits:
    print("fit", [round(c, 8) for c in f.coefficients], "R^2 %.3f" % f.r2)
print("wrote", *emit_results(res.rows, out / "sweep"))
