"""Domain types for EV mobility-on-demand scheduling.

Energies are battery percentage points (0-100).  Time is a grid of integer
points; point 0 is reserved for the initial placement of the fleet.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

FORMAT_VERSION = 1
FULL_BATTERY = 100.0


@dataclass(frozen=True)
class TimeGrid:
    num_points: int
    minutes_per_point: float = 15.0


@dataclass(frozen=True)
class Station:
    id: int
    name: str
    capacity: int
    lat: Optional[float] = None
    lon: Optional[float] = None


@dataclass(frozen=True)
class Trip:
    duration: int
    energy: float


@dataclass(frozen=True)
class Network:
    stations: tuple[Station, ...]
    # (origin, dest) -> Trip; missing pairs are not drivable
    trips: dict = field(default_factory=dict, hash=False)

    @property
    def num_stations(self) -> int:
        return len(self.stations)


@dataclass(frozen=True)
class Task:
    id: int
    origin: int
    dest: int
    start: int
    duration: int
    energy: float
    customer: int

    @property
    def end(self) -> int:
        """First time point at which the EV is parked at `dest` again."""
        return self.start + self.duration


@dataclass(frozen=True)
class Customer:
    id: int
    alternatives: tuple[int, ...]
    arrival: int = 0


@dataclass(frozen=True)
class EVSpec:
    id: int
    start_location: int
    start_energy: float = FULL_BATTERY
    consumption: float = 10.0
    charge_rate: float = 25.0
    max_energy: float = FULL_BATTERY

    @property
    def max_travel_time(self) -> int:
        return int(self.max_energy // self.consumption)


@dataclass(frozen=True)
class Scenario:
    grid: TimeGrid
    network: Network
    evs: tuple[EVSpec, ...]
    customers: tuple[Customer, ...]
    tasks: tuple[Task, ...]
    seed: Optional[int] = None
    max_alternatives: int = 3

    @property
    def T(self) -> int:
        return self.grid.num_points

    @property
    def stations(self) -> tuple[Station, ...]:
        return self.network.stations

    @cached_property
    def capacity(self) -> np.ndarray:
        return np.array([st.capacity for st in self.network.stations], dtype=np.int64)

    @cached_property
    def task_arrays(self) -> dict[str, np.ndarray]:
        """Column view of the task table (origin, dest, start, end, duration, energy, customer)."""
        cols = ("origin", "dest", "start", "end", "duration", "energy", "customer")
        out = {c: np.array([getattr(t, c) for t in self.tasks], dtype=np.int64 if c != "energy" else float)
               for c in cols}
        if not self.tasks:
            out = {c: np.zeros(0, dtype=np.int64 if c != "energy" else float) for c in cols}
        return out

    @cached_property
    def ev_rates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(consumption, charge_rate, max_energy) per EV."""
        return (np.array([ev.consumption for ev in self.evs], dtype=float),
                np.array([ev.charge_rate for ev in self.evs], dtype=float),
                np.array([ev.max_energy for ev in self.evs], dtype=float))

    def with_evs(self, evs) -> "Scenario":
        return Scenario(self.grid, self.network, tuple(evs), self.customers, self.tasks,
                        self.seed, self.max_alternatives)


@dataclass
class Schedule:
    """Dense decision arrays for one solution.

    ``lam[r]`` task executed, ``eps[a, r, t]`` EV working on task, ``prk[a, t, l]``
    EV parked, ``bch[a, t]`` charge drawn, ``energy[a, t]`` battery level at the
    start of point ``t`` (before that point's charging or driving).
    """
    lam: np.ndarray
    assignment: dict
    eps: np.ndarray
    prk: np.ndarray
    bch: np.ndarray
    energy: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return (self.assignment == other.assignment
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("lam", "eps", "prk", "bch", "energy")))


@dataclass(frozen=True)
class Violation:
    constraint: str
    index: tuple
    detail: str


@dataclass
class FeasibilityReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def by_constraint(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.violations:
            out[v.constraint] = out.get(v.constraint, 0) + 1
        return out


@dataclass
class RunMetrics:
    algorithm: str
    serviced: Optional[int]
    customers: int
    evs: int = 0
    seed: Optional[int] = None
    efficiency_vs_optimal: Optional[float] = None
    wall_time: float = 0.0
    nodes: Optional[int] = None
    status: str = "ok"


def validate_scenario(s: Scenario) -> list[str]:
    """Return one message per broken structural invariant (empty when valid)."""
    errors = []
    T = s.grid.num_points
    L = len(s.network.stations)
    if T < 2:
        errors.append(f"grid: num_points {T} < 2")
    if not s.grid.minutes_per_point > 0:
        errors.append("grid: minutes_per_point must be positive")

    for i, st in enumerate(s.network.stations):
        if st.id != i:
            errors.append(f"station {i}: id {st.id} does not match position")
        if st.capacity < 1:
            errors.append(f"station {i}: capacity {st.capacity} < 1")

    rates = {ev.consumption for ev in s.evs}
    if len(rates) > 1:
        errors.append(f"fleet: heterogeneous consumption rates {sorted(rates)}")
    con = next(iter(rates)) if len(rates) == 1 else None

    for (o, d), trip in s.network.trips.items():
        if not (0 <= o < L and 0 <= d < L) or o == d:
            errors.append(f"trip {o}->{d}: invalid station pair")
        if trip.duration < 1:
            errors.append(f"trip {o}->{d}: duration {trip.duration} < 1")
        if con is not None and trip.energy != trip.duration * con:
            errors.append(f"trip {o}->{d}: energy {trip.energy} != duration x consumption")

    for a, ev in enumerate(s.evs):
        if ev.id != a:
            errors.append(f"ev {a}: id {ev.id} does not match position")
        if not 0 <= ev.start_location < L:
            errors.append(f"ev {a}: unknown start location {ev.start_location}")
        if ev.max_energy != FULL_BATTERY:
            errors.append(f"ev {a}: max_energy must be {FULL_BATTERY:g}")
        if not 0 <= ev.start_energy <= ev.max_energy:
            errors.append(f"ev {a}: start_energy {ev.start_energy} outside [0, max_energy]")
        if ev.consumption <= 0 or ev.charge_rate <= 0:
            errors.append(f"ev {a}: consumption and charge_rate must be positive")

    placed = np.zeros(L, dtype=int)
    for ev in s.evs:
        if 0 <= ev.start_location < L:
            placed[ev.start_location] += 1
    for l in range(L):
        if placed[l] > s.network.stations[l].capacity:
            errors.append(f"station {l}: {placed[l]} EVs start here, capacity {s.network.stations[l].capacity}")

    owners = np.zeros(len(s.tasks), dtype=int)
    for i, c in enumerate(s.customers):
        if c.id != i:
            errors.append(f"customer {i}: id {c.id} does not match position")
        if not 1 <= len(c.alternatives) <= s.max_alternatives:
            errors.append(f"customer {i}: {len(c.alternatives)} alternatives, allowed 1..{s.max_alternatives}")
        for r in c.alternatives:
            if not 0 <= r < len(s.tasks):
                errors.append(f"customer {i}: unknown task {r}")
                continue
            owners[r] += 1
            if s.tasks[r].customer != i:
                errors.append(f"customer {i}: task {r} names customer {s.tasks[r].customer}")
        starts = [s.tasks[r].start for r in c.alternatives if 0 <= r < len(s.tasks)]
        if starts and c.arrival > min(starts) - 1:
            errors.append(f"customer {i}: arrival {c.arrival} after earliest start - 1")

    for r, task in enumerate(s.tasks):
        if task.id != r:
            errors.append(f"task {r}: id {task.id} does not match position")
        if owners[r] != 1:
            errors.append(f"task {r}: referenced by {owners[r]} customers, expected 1")
        if task.origin == task.dest:
            errors.append(f"task {r}: origin == dest ({task.origin})")
        if task.start < 1:
            errors.append(f"task {r}: start {task.start} < 1")
        if task.end > T - 1:
            errors.append(f"task {r}: ends at {task.end}, beyond horizon {T - 1}")
        if task.energy > FULL_BATTERY:
            errors.append(f"task {r}: energy {task.energy} exceeds a full battery")
        trip = s.network.trips.get((task.origin, task.dest))
        if task.origin == task.dest:
            pass
        elif trip is None:
            errors.append(f"task {r}: pair {task.origin}->{task.dest} not in trip matrix")
        elif (trip.duration, trip.energy) != (task.duration, task.energy):
            errors.append(f"task {r}: duration/energy disagree with trip matrix")
    return errors


# --- scenario file ---------------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    return {
        "format": FORMAT_VERSION,
        "seed": s.seed,
        "max_alternatives": s.max_alternatives,
        "grid": {"num_points": s.grid.num_points, "minutes_per_point": s.grid.minutes_per_point},
        "stations": [{"id": st.id, "name": st.name, "capacity": st.capacity, "lat": st.lat, "lon": st.lon}
                     for st in s.network.stations],
        "trips": [{"origin": o, "dest": d, "duration": t.duration, "energy": t.energy}
                  for (o, d), t in sorted(s.network.trips.items())],
        "evs": [{"id": ev.id, "start_location": ev.start_location, "start_energy": ev.start_energy,
                 "consumption": ev.consumption, "charge_rate": ev.charge_rate, "max_energy": ev.max_energy}
                for ev in s.evs],
        "customers": [{"id": c.id, "alternatives": list(c.alternatives), "arrival": c.arrival}
                      for c in s.customers],
        "tasks": [{"id": t.id, "origin": t.origin, "dest": t.dest, "start": t.start,
                   "duration": t.duration, "energy": t.energy, "customer": t.customer} for t in s.tasks],
    }


def scenario_from_dict(d: dict) -> Scenario:
    if d.get("format") != FORMAT_VERSION:
        raise ValueError(f"unsupported scenario format {d.get('format')!r}")
    stations = tuple(Station(**st) for st in d["stations"])
    trips = {(t["origin"], t["dest"]): Trip(t["duration"], t["energy"]) for t in d["trips"]}
    return Scenario(
        grid=TimeGrid(**d["grid"]),
        network=Network(stations, trips),
        evs=tuple(EVSpec(**ev) for ev in d["evs"]),
        customers=tuple(Customer(c["id"], tuple(c["alternatives"]), c.get("arrival", 0))
                        for c in d["customers"]),
        tasks=tuple(Task(**t) for t in d["tasks"]),
        seed=d.get("seed"),
        max_alternatives=d.get("max_alternatives", 3),
    )


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=1) + "\n")


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def schedule_to_dict(sch: Schedule) -> dict:
    return {
        "lambda": [int(x) for x in sch.lam],
        "assignment": {str(r): int(a) for r, a in sorted(sch.assignment.items())},
        "shape": {"evs": sch.eps.shape[0], "tasks": sch.eps.shape[1], "points": sch.eps.shape[2],
                  "stations": sch.prk.shape[2]},
        "eps": np.argwhere(sch.eps).tolist(),
        "prk": np.argwhere(sch.prk).tolist(),
        "bch": sch.bch.tolist(),
        "energy": sch.energy.tolist(),
    }


def schedule_from_dict(d: dict) -> Schedule:
    shp = d["shape"]
    A, R, T, L = shp["evs"], shp["tasks"], shp["points"], shp["stations"]
    eps = np.zeros((A, R, T), dtype=bool)
    prk = np.zeros((A, T, L), dtype=bool)
    for a, r, t in d["eps"]:
        eps[a, r, t] = True
    for a, t, l in d["prk"]:
        prk[a, t, l] = True
    return Schedule(
        lam=np.array(d["lambda"], dtype=bool).reshape(R),
        assignment={int(r): int(a) for r, a in d["assignment"].items()},
        eps=eps, prk=prk,
        bch=np.array(d["bch"], dtype=float).reshape(A, T),
        energy=np.array(d["energy"], dtype=float).reshape(A, T),
    )


def save_schedule(sch: Schedule, path) -> None:
    Path(path).write_text(json.dumps(schedule_to_dict(sch)) + "\n")


def load_schedule(path) -> Schedule:
    return schedule_from_dict(json.loads(Path(path).read_text()))
