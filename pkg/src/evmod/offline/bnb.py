"""Exact depth-first branch-and-bound for the offline assignment problem.

Charging is costless and appears in no objective, so the pointwise-highest
battery trajectory (charge as much as possible whenever parked) is feasible
whenever any trajectory is.  That removes the only continuous variable and
leaves a purely combinatorial search over task-to-EV assignments.

Tasks are decided in order of start time.  Processing them chronologically is
what makes eager pruning sound: an EV's chain of trips can only be extended at
its end, and once every task starting before ``t`` is decided, station
occupancy and battery levels before ``t`` are final.

Bounds, cheapest first:

* executed + customers that still have an undecided alternative;
* executed + the optimum of a time-expanded fleet-flow LP over the undecided
  tasks (station capacities and one-alternative-per-customer kept, battery
  dropped).  When that LP comes back integral it is turned into a concrete
  assignment, which usually closes the node on the spot.

EVs parked at the same station with the same battery level just before a
departure are interchangeable, so only one of them is branched on.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from ..feasibility import check_feasibility, simulate_trace
from ..model import Scenario, Schedule, validate_scenario

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
TIMED_OUT = "TimedOut"
INT_TOL = 1e-6


class InvalidScenario(ValueError):
    pass


@dataclass
class SolveResult:
    status: str
    schedule: Optional[Schedule]
    objective: int
    nodes_explored: int
    wall_time: float
    assignment: dict = field(default_factory=dict)
    lp_solves: int = 0


class _Stop(Exception):
    pass


@dataclass
class _LP:
    total: float      # executed at the node that solved it + LP optimum
    x: dict           # task id -> LP value
    integral: bool


class _Search:
    def __init__(self, s: Scenario, time_budget, node_budget, cuts):
        self.s = s
        self.cuts = cuts
        self.deadline = None if time_budget is None else time.perf_counter() + time_budget
        self.node_budget = node_budget
        self.nodes = 0
        self.lp_solves = 0

        ta = s.task_arrays
        self.order = sorted(range(len(s.tasks)), key=lambda r: (s.tasks[r].start, r))
        self.start, self.end = ta["start"], ta["end"]
        self.origin, self.dest = ta["origin"], ta["dest"]
        self.energy_need, self.cust = ta["energy"], ta["customer"]
        self.cap = s.capacity
        self.T, self.L = s.T, s.network.num_stations
        self.last_pos = np.full(len(s.customers), -1)
        for k, r in enumerate(self.order):
            self.last_pos[self.cust[r]] = k

        A = len(s.evs)
        self.loc = np.array([ev.start_location for ev in s.evs], dtype=np.int64)
        self.free = np.zeros(A, dtype=np.int64)
        self.efree = np.array([ev.start_energy for ev in s.evs], dtype=float)
        self.ch = s.ev_rates[1]
        self.emax = s.ev_rates[2]
        self.occ = np.zeros((self.L, self.T), dtype=np.int64)
        np.add.at(self.occ, self.loc, 1)
        self.served = np.zeros(len(s.customers), dtype=bool)
        self.assigned: dict[int, int] = {}

        self.best = 0
        self.best_assignment: dict[int, int] = {}

    # -- state helpers ------------------------------------------------------

    def level_at_departure(self, evs, start):
        return np.minimum(self.emax[evs], self.efree[evs] + self.ch[evs] * (start - self.free[evs]))

    def candidates(self, r):
        """Lowest-id representative of each class of interchangeable EVs."""
        s0 = self.start[r]
        evs = np.flatnonzero((self.loc == self.origin[r]) & (self.free <= s0 - 1))
        if evs.size == 0:
            return []
        level = self.level_at_departure(evs, s0)
        reps, seen = [], set()
        for a, e in zip(evs.tolist(), level.tolist()):
            if e + 1e-9 < self.energy_need[r]:
                continue
            key = (round(e, 9), self.ch[a], self.emax[a])
            if key not in seen:
                seen.add(key)
                reps.append((a, e))
        return reps

    def apply(self, r, a, level):
        undo = (a, self.loc[a], self.free[a], self.efree[a])
        self.occ[self.origin[r], self.start[r]:] -= 1
        self.occ[self.dest[r], self.end[r]:] += 1
        self.loc[a], self.free[a] = self.dest[r], self.end[r]
        self.efree[a] = level - self.energy_need[r]
        self.served[self.cust[r]] = True
        self.assigned[r] = a
        return undo

    def revert(self, r, undo):
        a, loc, free, efree = undo
        self.occ[self.origin[r], self.start[r]:] += 1
        self.occ[self.dest[r], self.end[r]:] -= 1
        self.loc[a], self.free[a], self.efree[a] = loc, free, efree
        self.served[self.cust[r]] = False
        del self.assigned[r]

    def tick(self):
        self.nodes += 1
        if self.node_budget is not None and self.nodes > self.node_budget:
            raise _Stop
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise _Stop

    def record(self, assignment):
        if len(assignment) > self.best:
            self.best = len(assignment)
            self.best_assignment = dict(assignment)

    # -- bounds -------------------------------------------------------------

    def flow_lp(self, k) -> Optional[_LP]:
        """LP relaxation of the remaining problem as fleet flow over (station, time)."""
        self.lp_solves += 1
        T, L = self.T, self.L
        tasks = [r for r in self.order[k:] if not self.served[self.cust[r]]]
        t0 = self.start[self.order[k]] - 1
        H = T - t0
        nx = len(tasks)
        nw = L * H

        def w(l, t):
            return nx + l * H + (t - t0)

        eq_r, eq_c, eq_v = [], [], []
        ub_r, ub_c, ub_v = [], [], []
        for l in range(L):
            for t in range(t0, T):
                row = l * H + (t - t0)
                eq_r.append(row); eq_c.append(w(l, t)); eq_v.append(1.0)
                if t > t0:
                    eq_r.append(row); eq_c.append(w(l, t - 1)); eq_v.append(-1.0)
                ub_r.append(row); ub_c.append(w(l, t)); ub_v.append(1.0)
        for j, r in enumerate(tasks):
            dep = self.origin[r] * H + (self.start[r] - 1 - t0)
            arr = self.dest[r] * H + (self.end[r] - t0)
            eq_r += [dep, arr]; eq_c += [j, j]; eq_v += [1.0, -1.0]
            ub_r.append(dep); ub_c.append(j); ub_v.append(1.0)
        b_ub = [float(self.cap[l]) for l in range(L) for _ in range(H)]
        by_customer: dict[int, list[int]] = {}
        for j, r in enumerate(tasks):
            by_customer.setdefault(int(self.cust[r]), []).append(j)
        row = nw
        for js in by_customer.values():
            if len(js) > 1:
                for j in js:
                    ub_r.append(row); ub_c.append(j); ub_v.append(1.0)
                b_ub.append(1.0)
                row += 1

        supply = np.zeros((L, H))
        for a in range(len(self.loc)):
            supply[self.loc[a], max(self.free[a], t0) - t0] += 1
        n = nx + nw
        A_eq = coo_matrix((eq_v, (eq_r, eq_c)), shape=(nw, n)).tocsr()
        A_ub = coo_matrix((ub_v, (ub_r, ub_c)), shape=(row, n)).tocsr()
        c = np.concatenate([-np.ones(nx), np.zeros(nw)])
        bounds = [(0.0, 1.0)] * nx + [(0.0, None)] * nw
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=supply.ravel(), bounds=bounds,
                      method="highs")
        if res.status != 0:
            return None
        x = {r: float(res.x[j]) for j, r in enumerate(tasks)}
        integral = all(min(v, 1.0 - v) < INT_TOL for v in x.values())
        return _LP(len(self.assigned) - res.fun, x, integral)

    def realize(self, lp: _LP, k) -> Optional[dict]:
        """Give every task the integral LP picked an EV, highest battery first."""
        chosen = [r for r in self.order[k:] if lp.x.get(r, 0.0) > 0.5]
        undo = []
        ok = True
        for r in chosen:
            evs = np.flatnonzero((self.loc == self.origin[r]) & (self.free <= self.start[r] - 1))
            if evs.size == 0:
                ok = False
                break
            level = self.level_at_departure(evs, self.start[r])
            i = int(np.argmax(level))
            if level[i] + 1e-9 < self.energy_need[r]:
                ok = False
                break
            undo.append((r, self.apply(r, int(evs[i]), float(level[i]))))
        ok = ok and bool(np.all(self.occ <= self.cap[:, None]))
        result = dict(self.assigned) if ok else None
        for r, u in reversed(undo):
            self.revert(r, u)
        return result

    # -- search -------------------------------------------------------------

    def prefix_ok(self, upto):
        return bool(np.all(self.occ[:, :upto] <= self.cap[:, None]))

    def dfs(self, k, lp: Optional[_LP]):
        self.tick()
        R = len(self.order)
        while k < R and self.served[self.cust[self.order[k]]]:
            k += 1
        horizon = self.start[self.order[k]] if k < R else self.T
        if not self.prefix_ok(horizon):
            return
        if k == R:
            self.record(self.assigned)
            return

        executed = len(self.assigned)
        remaining = int(np.count_nonzero((self.last_pos >= k) & ~self.served))
        if executed + remaining <= self.best:
            return
        if self.cuts:
            if lp is None:
                lp = self.flow_lp(k)
                if lp is None:
                    return
                if lp.integral:
                    found = self.realize(lp, k)
                    if found is not None:
                        self.record(found)
            if math.floor(lp.total + INT_TOL) <= self.best:
                return

        r = self.order[k]
        reps = self.candidates(r)
        xr = lp.x.get(r, 0.0) if lp is not None else 1.0

        def take():
            for a, level in reps:
                undo = self.apply(r, a, level)
                self.dfs(k + 1, lp if xr > 1 - INT_TOL else None)
                self.revert(r, undo)

        def skip():
            self.dfs(k + 1, lp if xr < INT_TOL else None)

        # follow the LP's lead first; both orders are deterministic
        if xr >= 0.5:
            take()
            skip()
        else:
            skip()
            take()


def solve_exact(s: Scenario, time_budget: Optional[float] = 30.0, node_budget: Optional[int] = None,
                cuts: bool = True) -> SolveResult:
    """Maximise the number of served customers exactly.

    ``cuts=False`` drops the fleet-flow LP bound and searches with the
    counting bound alone (much slower, same optimum).  When a budget runs out
    the best assignment found so far comes back with status ``TimedOut``.
    """
    errors = validate_scenario(s)
    if errors:
        raise InvalidScenario("; ".join(errors[:5]))
    t0 = time.perf_counter()
    search = _Search(s, time_budget, node_budget, cuts)
    status = OPTIMAL
    try:
        search.dfs(0, None)
    except _Stop:
        status = TIMED_OUT
    schedule = simulate_trace(s, search.best_assignment)
    if status == OPTIMAL:
        assert check_feasibility(s, schedule).ok
    return SolveResult(status, schedule, search.best, search.nodes, time.perf_counter() - t0,
                       dict(search.best_assignment), search.lp_solves)
