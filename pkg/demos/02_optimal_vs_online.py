"""Exact optimum against the three online heuristics at the default experimental size."""
import numpy as np

from evmod.generate import GenConfig, generate
from evmod.offline.bnb import solve_exact
from evmod.online import HeuristicKind, run_online

rows = []
for seed in range(10):
    s = generate(GenConfig(seed=seed))  # 15 EVs, 70 customers, 58 points
    res = solve_exact(s)
    online = [run_online(s, k)[1].serviced
              for k in (HeuristicKind.square(), HeuristicKind.destination(), HeuristicKind.random(seed))]
    rows.append([res.objective] + online)
    print(f"seed {seed}: optimal {res.objective:2d} in {res.wall_time * 1e3:5.1f} ms "
          f"({res.nodes_explored} nodes)  square {online[0]}  destination {online[1]}  random {online[2]}")

rows = np.array(rows, dtype=float)
eff = rows[:, 1:] / rows[:, :1]
print("mean efficiency  square %.3f  destination %.3f  random %.3f" % tuple(eff.mean(axis=0)))

# Watching one online run decision by decision
s = generate(GenConfig(seed=0, num_customers=8))
def show(d, t):
    if d.accepted:
        print(f"t={t:2d} customer {d.customer}: task {d.task} on EV {d.ev}, scores {d.scores}")
    else:
        print(f"t={t:2d} customer {d.customer}: rejected")
run_online(s, HeuristicKind.square(), show)
