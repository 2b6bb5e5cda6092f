"""Online customer-by-customer EV assignment with congestion heuristics.

Requests are handled one at a time in arrival order.  For each request the
scheduler keeps the alternatives whose destination can still absorb one more
EV and whose origin will hold a sufficiently charged, otherwise free EV just
before departure, scores them with one of three policies and commits the
lowest-scoring one.  Committed trips are never revisited.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .feasibility import simulate_trace
from .model import Customer, RunMetrics, Scenario, Schedule

SQUARE = "square"
DESTINATION = "destination"
RANDOM = "random"


@dataclass(frozen=True)
class HeuristicKind:
    name: str
    seed: Optional[int] = None

    def __post_init__(self):
        if self.name not in (SQUARE, DESTINATION, RANDOM):
            raise ValueError(f"unknown heuristic {self.name!r}")
        if self.name == RANDOM and self.seed is None:
            raise ValueError("the random heuristic needs an explicit seed")

    @classmethod
    def square(cls):
        return cls(SQUARE)

    @classmethod
    def destination(cls):
        return cls(DESTINATION)

    @classmethod
    def random(cls, seed: int):
        return cls(RANDOM, seed)

    @property
    def label(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True)
class Decision:
    customer: int
    accepted: bool
    task: Optional[int] = None
    ev: Optional[int] = None
    scores: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FleetState:
    """Scheduler state at ``t_now``.

    ``station_at[a, t]`` is the station EV ``a`` occupies at point ``t`` under
    all commitments so far (-1 while driving); ``location``/``free_at`` are the
    station it ends up at and the first point it is parked there, and
    ``energy_free`` the battery level entering ``free_at``.
    ``occupancy[l, t]`` is the projected parked count, so reserved arrivals are
    already in it.  ``energy`` is the battery level at the start of ``t_now``.
    """
    t_now: int
    location: np.ndarray
    free_at: np.ndarray
    energy: np.ndarray
    energy_free: np.ndarray
    station_at: np.ndarray   # (A, T)
    occupancy: np.ndarray    # (L, T)
    committed: tuple = ()    # (customer, task, ev)

    @classmethod
    def initial(cls, s: Scenario) -> "FleetState":
        A, T, L = len(s.evs), s.T, s.network.num_stations
        location = np.array([ev.start_location for ev in s.evs], dtype=np.int64)
        occupancy = np.zeros((L, T), dtype=np.int64)
        np.add.at(occupancy, location, 1)
        station_at = np.repeat(location[:, None], T, axis=1)
        e0 = np.array([ev.start_energy for ev in s.evs], dtype=float)
        return cls(0, location, np.zeros(A, dtype=np.int64), e0, e0.copy(), station_at, occupancy)

    @property
    def busy_until(self) -> np.ndarray:
        return self.free_at

    @property
    def driving(self) -> np.ndarray:
        return self.station_at < 0

    def parked(self, station: int) -> set:
        """EVs parked at ``station`` at ``t_now``."""
        t = min(self.t_now, self.station_at.shape[1] - 1)
        return set(np.flatnonzero(self.station_at[:, t] == station).tolist())

    def reserved(self, station: int, t: int) -> int:
        """Projected parked EVs at ``station`` at ``t``, arrivals in flight included."""
        return int(self.occupancy[station, t])


def advance_charging(fs: FleetState, s: Scenario, to: int) -> FleetState:
    """Roll every battery forward from ``fs.t_now`` to ``to``."""
    if to < fs.t_now:
        raise ValueError(f"cannot move back from t={fs.t_now} to t={to}")
    if to == fs.t_now:
        return fs
    energy = _roll_energy(fs, s, fs.t_now, to, fs.energy)
    return replace(fs, t_now=to, energy=energy)


def _roll_energy(fs, s, t0, t1, energy):
    con, ch, cap = s.ev_rates
    e = np.array(energy, dtype=float)
    for t in range(t0, t1):
        e = np.where(fs.station_at[:, t] < 0, e - con, np.minimum(cap, e + ch))
    return e


def level_before(fs: FleetState, s: Scenario, evs, start: int) -> np.ndarray:
    """Battery of idle ``evs`` after charging at ``start - 1``.

    Valid only for EVs parked without interruption from ``free_at`` onward.
    """
    ch, cap = s.ev_rates[1:]
    return np.minimum(cap[evs], fs.energy_free[evs] + ch[evs] * (start - fs.free_at[evs]))


def feasible_tasks(fs: FleetState, s: Scenario, dem) -> list[tuple[int, int]]:
    """(task, EV) pairs the scheduler could commit right now, in task order."""
    out = []
    cap = s.capacity
    for r in sorted(dem):
        task = s.tasks[r]
        if task.start - 1 < fs.t_now:
            continue
        # destination must keep a free spot from arrival to the horizon
        if fs.occupancy[task.dest, task.end:].max(initial=0) + 1 > cap[task.dest]:
            continue
        cands = np.flatnonzero((fs.location == task.origin) & (fs.free_at <= task.start - 1))
        if cands.size == 0:
            continue
        ok = cands[level_before(fs, s, cands, task.start) > task.energy]
        if ok.size:
            out.append((r, int(ok[0])))
    return out


def score(fs: FleetState, s: Scenario, task_id: int, kind: HeuristicKind,
          rng: Optional[np.random.Generator] = None) -> float:
    """Congestion score of committing ``task_id``; lower is better."""
    task = s.tasks[task_id]
    if kind.name == SQUARE:
        counts = fs.occupancy[:, task.end].astype(float)
        counts[task.origin] -= 1
        counts[task.dest] += 1
        return float(np.sum(counts ** 2))
    if kind.name == DESTINATION:
        return float(fs.occupancy[task.dest, task.end]) / float(s.capacity[task.dest])
    if rng is None:
        raise ValueError("random scoring needs a generator")
    return float(rng.random())


def commit(fs: FleetState, s: Scenario, customer: int, task_id: int, ev: int) -> FleetState:
    task = s.tasks[task_id]
    occupancy = fs.occupancy.copy()
    occupancy[task.origin, task.start:] -= 1
    occupancy[task.dest, task.end:] += 1
    station_at = fs.station_at.copy()
    station_at[ev, task.start:task.end] = -1
    station_at[ev, task.end:] = task.dest
    location = fs.location.copy()
    location[ev] = task.dest
    energy_free = fs.energy_free.copy()
    energy_free[ev] = level_before(fs, s, [ev], task.start)[0] - task.energy
    free_at = fs.free_at.copy()
    free_at[ev] = task.end
    return replace(fs, location=location, free_at=free_at, energy_free=energy_free,
                   station_at=station_at, occupancy=occupancy,
                   committed=fs.committed + ((customer, task_id, ev),))


def handle_request(fs: FleetState, s: Scenario, customer: Customer, kind: HeuristicKind,
                   rng: Optional[np.random.Generator] = None) -> tuple[FleetState, Decision]:
    feasible = feasible_tasks(fs, s, customer.alternatives)
    if not feasible:
        return fs, Decision(customer.id, False)
    scores = {r: score(fs, s, r, kind, rng) for r, _ in feasible}
    # ties go to the lowest task id
    r, a = min(feasible, key=lambda p: (scores[p[0]], p[0]))
    return commit(fs, s, customer.id, r, a), Decision(customer.id, True, r, a, scores)


def run_online(s: Scenario, kind: HeuristicKind,
               on_decision: Optional[Callable[[Decision, int], None]] = None) -> tuple[Schedule, RunMetrics]:
    """Serve every customer in arrival order and return the resulting schedule."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(kind.seed) if kind.name == RANDOM else None
    fs = FleetState.initial(s)
    for c in sorted(s.customers, key=lambda c: (c.arrival, c.id)):
        fs = advance_charging(fs, s, c.arrival)
        fs, decision = handle_request(fs, s, c, kind, rng)
        if on_decision is not None:
            on_decision(decision, c.arrival)
    schedule = simulate_trace(s, {r: a for _, r, a in fs.committed})
    wall = time.perf_counter() - t0
    return schedule, RunMetrics(kind.label, len(fs.committed), len(s.customers), len(s.evs),
                                kind.seed, wall_time=wall)
