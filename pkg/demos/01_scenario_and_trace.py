"""A generated city, one hand-picked assignment and the trace it produces."""
import numpy as np

from evmod.feasibility import check_feasibility, simulate_trace
from evmod.generate import GenConfig, default_stations, generate

# The default network is eight DC stations, ten spaces each.  Trip lengths come
# from great-circle distance at 40 km/h on a 15-minute grid.
for st in default_stations():
    print(f"{st.id}  {st.name:<18} {st.lat:.4f} {st.lon:.4f}")

s = generate(GenConfig(seed=1, num_evs=4, num_customers=6, num_time_points=20))
print(len(s.network.trips), "drivable pairs,", len(s.tasks), "candidate trips")
for c in s.customers:
    alts = [(s.tasks[r].origin, s.tasks[r].dest, s.tasks[r].start) for r in c.alternatives]
    print("customer", c.id, "asks at", c.arrival, "for one of", alts)

# Hand the earliest trip that leaves from an EV's home station to that EV
home = {e.start_location: a for a, e in reversed(list(enumerate(s.evs)))}
task = min((t for t in s.tasks if t.origin in home), key=lambda t: t.start)
r, ev = task.id, home[task.origin]
sch = simulate_trace(s, {r: ev})
print("EV", ev, "battery entering each point:", sch.energy[ev].astype(int).tolist())
where = np.where(sch.prk[ev].any(axis=1), np.argmax(sch.prk[ev], axis=1), -1)
print("station by point (-1 while driving):", where.tolist())
print("working points:", np.flatnonzero(sch.eps[ev, r]).tolist())
print("feasible:", check_feasibility(s, sch).ok)

# Break it on purpose: park the EV in two places at once
sch.prk[ev, 5, :2] = True
print("after tampering:", check_feasibility(s, sch).by_constraint())
