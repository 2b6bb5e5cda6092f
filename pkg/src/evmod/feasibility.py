"""Trace construction and the constraint checker shared by every solver.

``check_feasibility`` evaluates each constraint family directly on the dense
schedule arrays; it never looks at how the schedule was produced.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Mapping

import numpy as np

from .model import FULL_BATTERY, FeasibilityReport, Scenario, Schedule, Violation

TOL = 1e-9


class InfeasibleAssignment(ValueError):
    """Raised when a task-to-EV assignment cannot be turned into a trace."""


def simulate_trace(s: Scenario, assignment: Mapping[int, int]) -> Schedule:
    """Expand ``{task: ev}`` into full decision arrays.

    Each EV drives during its tasks' windows and is parked everywhere else;
    while parked it charges ``min(charge_rate, 100 - level)``.  Capacity is not
    checked here.
    """
    A, R, T, L = len(s.evs), len(s.tasks), s.T, s.network.num_stations
    eps = np.zeros((A, R, T), dtype=bool)
    prk = np.zeros((A, T, L), dtype=bool)
    bch = np.zeros((A, T))
    energy = np.zeros((A, T))
    lam = np.zeros(R, dtype=bool)

    per_ev = defaultdict(list)
    for r, a in assignment.items():
        if not 0 <= r < R:
            raise InfeasibleAssignment(f"unknown task {r}")
        if not 0 <= a < A:
            raise InfeasibleAssignment(f"unknown EV {a}")
        per_ev[a].append(s.tasks[r])
        lam[r] = True

    for a, ev in enumerate(s.evs):
        loc, free_from = ev.start_location, 0
        driving = np.zeros(T, dtype=bool)
        for task in sorted(per_ev.get(a, ()), key=lambda k: (k.start, k.id)):
            if task.start - 1 < free_from:
                raise InfeasibleAssignment(f"EV {a} is still busy when task {task.id} starts at {task.start}")
            if task.origin != loc:
                raise InfeasibleAssignment(
                    f"EV {a} is at station {loc}, task {task.id} departs from {task.origin}")
            prk[a, free_from:task.start, loc] = True
            eps[a, task.id, task.start:task.end] = True
            driving[task.start:task.end] = True
            loc, free_from = task.dest, task.end
        prk[a, free_from:, loc] = True

        level = float(ev.start_energy)
        for t in range(T):
            energy[a, t] = level
            if driving[t]:
                level -= ev.consumption
            else:
                bch[a, t] = min(ev.charge_rate, ev.max_energy - level)
                level += bch[a, t]
            if level < -TOL:
                raise InfeasibleAssignment(f"EV {a} runs out of energy at t={t}")

    return Schedule(lam=lam, assignment={int(r): int(a) for r, a in assignment.items()},
                    eps=eps, prk=prk, bch=bch, energy=energy)


def objective(sch: Schedule) -> int:
    return int(np.count_nonzero(sch.lam))


def check_feasibility(s: Scenario, sch: Schedule, cuts: bool = True) -> FeasibilityReport:
    """Evaluate every constraint family against ``sch``.

    Violations are tagged ``Eq2`` .. ``Eq15`` after the constraint they break.
    ``cuts=False`` skips the redundant flow-conservation family (Eq15).
    """
    A, R, T, L = len(s.evs), len(s.tasks), s.T, s.network.num_stations
    expected = {"lam": (R,), "eps": (A, R, T), "prk": (A, T, L), "bch": (A, T), "energy": (A, T)}
    for name, shape in expected.items():
        if getattr(sch, name).shape != shape:
            raise ValueError(f"schedule.{name} has shape {getattr(sch, name).shape}, expected {shape}")

    report = FeasibilityReport()
    add = report.violations.append
    ta = s.task_arrays
    start, end, dur = ta["start"], ta["end"], ta["duration"]
    origin, dest = ta["origin"], ta["dest"]
    lam = sch.lam.astype(int)
    eps = sch.eps.astype(int)
    prk = sch.prk.astype(int)
    tt = np.arange(T)
    window = (tt[None, :] >= start[:, None]) & (tt[None, :] < end[:, None])  # (R, T)

    # Eq2: work inside the window equals duration when executed
    inside = (eps * window[None]).sum(axis=(0, 2))
    for r in np.flatnonzero(inside != dur * lam):
        add(Violation("Eq2", (int(r),), f"task {r}: {inside[r]} working points, expected {dur[r] * lam[r]}"))

    # Eq3: no work outside the window
    outside = (eps * ~window[None]).sum(axis=(0, 2))
    for r in np.flatnonzero(outside):
        add(Violation("Eq3", (int(r),), f"task {r}: {outside[r]} working points outside its window"))

    # Eq4: one EV keeps the task for the whole window
    if T > 1:
        inner = (tt[None, :-1] >= start[:, None]) & (tt[None, :-1] < end[:, None] - 1)
        changed = (eps[:, :, 1:] != eps[:, :, :-1]) & inner[None]
        for a, r, t in np.argwhere(changed):
            add(Violation("Eq4", (int(a), int(r), int(t)), f"EV {a} task {r}: work changes between t={t} and t={t + 1}"))

    # Eq5: charge only while parked, at most the charge rate
    ch = np.array([ev.charge_rate for ev in s.evs])
    parked = prk.sum(axis=2)
    limit = parked * ch[:, None] if A else np.zeros((0, T))
    bad5 = (sch.bch > limit + TOL) | (sch.bch < -TOL)
    for a, t in np.argwhere(bad5):
        add(Violation("Eq5", (int(a), int(t)), f"EV {a} t={t}: charge {sch.bch[a, t]:g} with limit {limit[a, t]:g}"))

    # Eq6: battery stays within [0, 100]
    if A:
        e0 = np.array([ev.start_energy for ev in s.evs], dtype=float)
        con = np.array([ev.consumption for ev in s.evs], dtype=float)
        started = tt[None, :] >= start[:, None]
        used = np.cumsum((eps * started[None]).sum(axis=1), axis=1) * con[:, None]
        level = e0[:, None] + np.cumsum(sch.bch, axis=1) - used
        for a, t in np.argwhere((level < -TOL) | (level > FULL_BATTERY + TOL)):
            add(Violation("Eq6", (int(a), int(t)), f"EV {a} t={t}: battery {level[a, t]:g} outside [0, 100]"))
        # the reported trace is the level entering each point
        entering = np.concatenate([e0[:, None], level[:, :-1]], axis=1)
        for a, t in np.argwhere(np.abs(entering - sch.energy) > 1e-6):
            add(Violation("Eq6", (int(a), int(t)),
                          f"EV {a} t={t}: reported energy {sch.energy[a, t]:g} != recursion {entering[a, t]:g}"))

    # Eq7: at most one alternative per customer
    for c in s.customers:
        n = int(lam[list(c.alternatives)].sum()) if c.alternatives else 0
        if n > 1:
            add(Violation("Eq7", (c.id,), f"customer {c.id}: {n} alternatives executed"))

    # Eq8: parked somewhere exactly when not working
    working = eps.sum(axis=1)
    for a, t in np.argwhere(parked != 1 - working):
        add(Violation("Eq8", (int(a), int(t)), f"EV {a} t={t}: parked at {parked[a, t]} stations, working {working[a, t]} tasks"))

    # Eq9: location changes are exactly two per executed task
    if T > 1:
        changes = np.abs(np.diff(prk, axis=1)).sum(axis=(1, 2))
        starts_worked = eps[:, np.arange(R), np.minimum(start, T - 1)].sum(axis=1) if R else np.zeros(A, int)
        for a in np.flatnonzero(changes != 2 * starts_worked):
            add(Violation("Eq9", (int(a),), f"EV {a}: {changes[a]} location changes for {starts_worked[a]} tasks"))

    # Eq10 / Eq11: at the origin just before, at the destination right after
    for r in range(R):
        s0, e1 = start[r], end[r]
        if s0 < 1 or e1 > T - 1:
            continue
        for a in range(A):
            if eps[a, r, s0] > prk[a, s0 - 1, origin[r]]:
                add(Violation("Eq10", (r, a), f"task {r}: EV {a} not at station {origin[r]} at t={s0 - 1}"))
            if eps[a, r, e1 - 1] > prk[a, e1, dest[r]]:
                add(Violation("Eq11", (r, a), f"task {r}: EV {a} not at station {dest[r]} at t={e1}"))

    # Eq12: station capacity
    occupancy = prk.sum(axis=0)  # (T, L)
    for t, l in np.argwhere(occupancy > s.capacity[None, :]):
        add(Violation("Eq12", (int(t), int(l)), f"station {l} t={t}: {occupancy[t, l]} EVs, capacity {s.capacity[l]}"))

    # Eq13: initial placement
    for a, ev in enumerate(s.evs):
        want = np.zeros(L, dtype=int)
        want[ev.start_location] = 1
        if not np.array_equal(prk[a, 0], want):
            add(Violation("Eq13", (a,), f"EV {a}: not parked only at station {ev.start_location} at t=0"))

    # Eq14: nothing runs at t=0
    for a, r in np.argwhere(eps[:, :, 0]):
        add(Violation("Eq14", (int(a), int(r)), f"EV {a} works on task {r} at t=0"))

    # Eq15: station totals change only through departures and arrivals
    if cuts and T > 1:
        delta = np.diff(occupancy, axis=0)  # (T-1, L)
        flow = np.zeros((T + 1, L), dtype=int)
        for r in np.flatnonzero(lam):
            flow[start[r], origin[r]] -= 1
            flow[end[r], dest[r]] += 1
        for t, l in np.argwhere(delta != flow[1:T]):
            add(Violation("Eq15", (int(t) + 1, int(l)),
                          f"station {l} t={t + 1}: count changes by {delta[t, l]}, tasks explain {flow[t + 1, l]}"))
    return report
