"""Random problem instances in the experimental configuration.

Defaults reproduce the evaluation setting: 8 Washington DC stations with 10
spots each, 58 points of 15 minutes, consumption 10 and charge rate 25 per
point, 40 km/h average speed and up to three alternative trips per customer.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .model import (FULL_BATTERY, Customer, EVSpec, Network, Scenario, Station, Task, TimeGrid,
                    Trip)

EARTH_RADIUS_KM = 6371.0088


class ConfigInfeasible(ValueError):
    pass


class StationFileError(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    num_stations: int = 8
    station_capacity: int = 10
    num_time_points: int = 58
    minutes_per_point: float = 15.0
    num_evs: int = 15
    num_customers: int = 70
    max_alternatives: int = 3
    consumption: float = 10.0
    charge_rate: float = 25.0
    avg_speed_kmh: float = 40.0
    min_trip_duration: int = 1
    # None draws each EV's initial charge uniformly from 0..100
    start_energy: Optional[float] = FULL_BATTERY
    # alternatives of one customer depart at the same point
    shared_start: bool = True
    # how many points before the earliest departure a request may arrive;
    # None spreads arrivals over [0, earliest start - 1]
    arrival_lead: Optional[int] = 0
    # explicit station list (e.g. from load_stations); default is the DC set
    stations: Optional[tuple] = field(default=None, hash=False)
    seed: int = 0

    def __post_init__(self):
        for name in ("num_stations", "station_capacity", "num_time_points", "max_alternatives",
                     "min_trip_duration"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.num_evs < 0 or self.num_customers < 0:
            raise ValueError("num_evs and num_customers must be non-negative")
        if self.consumption <= 0 or self.charge_rate <= 0 or self.avg_speed_kmh <= 0:
            raise ValueError("consumption, charge_rate and avg_speed_kmh must be positive")


def default_stations(capacity: int = 10) -> list[Station]:
    with resources.files("evmod.data").joinpath("dc_stations.csv").open() as fh:
        stations = _parse_stations(fh, "dc_stations.csv")
    return [Station(st.id, st.name, capacity, st.lat, st.lon) for st in stations]


def load_stations(csv_path) -> list[Station]:
    """Read a station CSV with header ``id,name,lat,lon,capacity``."""
    with open(csv_path, newline="") as fh:
        return _parse_stations(fh, str(csv_path))


def _parse_stations(fh, label: str) -> list[Station]:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["id", "name", "lat", "lon", "capacity"]:
        raise StationFileError(f"{label}:1: expected header id,name,lat,lon,capacity, got {header}")
    stations, seen = [], set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise StationFileError(f"{label}:{lineno}: expected 5 fields, got {len(row)}")
        try:
            sid, name, lat, lon, cap = int(row[0]), row[1].strip(), float(row[2]), float(row[3]), int(row[4])
        except ValueError as exc:
            raise StationFileError(f"{label}:{lineno}: {exc}") from None
        if cap < 1:
            raise StationFileError(f"{label}:{lineno}: station {sid} capacity {cap} < 1")
        if sid in seen:
            raise StationFileError(f"{label}:{lineno}: duplicate station id {sid}")
        seen.add(sid)
        stations.append(Station(sid, name, cap, lat, lon))
    # station ids double as array indices
    stations.sort(key=lambda st: st.id)
    if [st.id for st in stations] != list(range(len(stations))):
        raise StationFileError(f"{label}: station ids must be 0..{len(stations) - 1}")
    return stations


def great_circle_km(a: Station, b: Station) -> float:
    la1, lo1, la2, lo2 = map(math.radians, (a.lat, a.lon, b.lat, b.lon))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def build_trip_matrix(stations, avg_speed_kmh: float, minutes_per_point: float, consumption: float,
                      min_duration: int = 1, max_energy: float = FULL_BATTERY) -> dict:
    """Drivable ordered pairs -> Trip(duration in points, energy)."""
    km_per_point = avg_speed_kmh * minutes_per_point / 60.0
    trips = {}
    for a in stations:
        for b in stations:
            if a.id == b.id:
                continue
            # the epsilon keeps exact multiples (10 km at 10 km/point) from rounding up
            points = math.ceil(great_circle_km(a, b) / km_per_point - 1e-9)
            if points < min_duration:
                continue
            duration = max(points, 1)
            energy = duration * consumption
            if energy > max_energy:
                continue
            trips[(a.id, b.id)] = Trip(duration, energy)
    return trips


def _random_stations(n: int, capacity: int, rng: np.random.Generator) -> list[Station]:
    # scattered over roughly 20 x 20 km around central DC
    lat = 38.9 + rng.uniform(-0.09, 0.09, size=n)
    lon = -77.03 + rng.uniform(-0.115, 0.115, size=n)
    return [Station(i, f"S{i}", capacity, float(lat[i]), float(lon[i])) for i in range(n)]


def generate(cfg: GenConfig) -> Scenario:
    rng = np.random.default_rng(cfg.seed)
    T = cfg.num_time_points

    if cfg.stations is not None:
        stations = list(cfg.stations)
    elif cfg.num_stations <= 8:
        stations = default_stations(cfg.station_capacity)[:cfg.num_stations]
    else:
        stations = _random_stations(cfg.num_stations, cfg.station_capacity, rng)
    L = len(stations)

    if cfg.num_evs > sum(st.capacity for st in stations):
        raise ConfigInfeasible(f"{cfg.num_evs} EVs exceed total capacity {sum(st.capacity for st in stations)}")

    trips = build_trip_matrix(stations, cfg.avg_speed_kmh, cfg.minutes_per_point, cfg.consumption,
                              cfg.min_trip_duration)

    # round-robin placement, skipping full stations
    placed = [0] * L
    evs, l = [], 0
    for a in range(cfg.num_evs):
        while placed[l] >= stations[l].capacity:
            l = (l + 1) % L
        e0 = cfg.start_energy if cfg.start_energy is not None else float(rng.integers(0, 101))
        evs.append(EVSpec(a, l, e0, cfg.consumption, cfg.charge_rate))
        placed[l] += 1
        l = (l + 1) % L

    # a trip fits when it can start at t >= 1 and finish by T - 1
    pairs = [p for p in sorted(trips) if trips[p].duration <= T - 2]
    customers, tasks = [], []
    if cfg.num_customers and not pairs:
        raise ConfigInfeasible("no trip fits inside the time horizon")
    for i in range(cfg.num_customers):
        k = int(rng.integers(1, cfg.max_alternatives + 1))
        chosen: list[tuple[int, int, int]] = []
        if cfg.shared_start:
            shortest = min(trips[p].duration for p in pairs)
            common = int(rng.integers(1, T - 1 - shortest + 1))
            usable = [p for p in pairs if common + trips[p].duration <= T - 1]
        attempts = 0
        while len(chosen) < k and attempts < 100 * k:
            attempts += 1
            if cfg.shared_start:
                o, d = usable[int(rng.integers(len(usable)))]
                start = common
            else:
                o, d = pairs[int(rng.integers(len(pairs)))]
                start = int(rng.integers(1, T - 1 - trips[(o, d)].duration + 1))
            if (o, d, start) not in chosen:
                chosen.append((o, d, start))
        alt_ids = []
        for o, d, start in chosen:
            trip = trips[(o, d)]
            alt_ids.append(len(tasks))
            tasks.append(Task(len(tasks), o, d, start, trip.duration, trip.energy, i))
        earliest = min(tasks[r].start for r in alt_ids)
        lowest = 0 if cfg.arrival_lead is None else max(0, earliest - 1 - cfg.arrival_lead)
        arrival = int(rng.integers(lowest, earliest))
        customers.append(Customer(i, tuple(alt_ids), arrival))

    return Scenario(
        grid=TimeGrid(T, cfg.minutes_per_point),
        network=Network(tuple(stations), trips),
        evs=tuple(evs),
        customers=tuple(customers),
        tasks=tuple(tasks),
        seed=cfg.seed,
        max_alternatives=cfg.max_alternatives,
    )
