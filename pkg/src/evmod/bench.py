"""Experiment sweeps: service quality (exp1) and optimal-solver runtime (exp2).

Every grid point (evs, customers) and seed produces one scenario.  The exact
solver and all three online heuristics run on that same scenario, and each
run becomes one :class:`RunMetrics` row.  ``series.csv`` is computed from the
rows as read back from ``results.csv``, so the aggregates never depend on
anything that is not in the results file.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import groupby
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .generate import GenConfig, generate
from .model import RunMetrics, Scenario
from .offline.bnb import OPTIMAL, solve_exact
from .online import HeuristicKind, run_online

OPTIMAL_LABEL = "Optimal"
SKIPPED = "skipped"
ALGORITHMS = (OPTIMAL_LABEL, "Square", "Destination", "Random")

RESULT_COLUMNS = ("algorithm", "evs", "customers", "seed", "serviced", "efficiency", "wall_time",
                  "nodes", "status")
SERIES_COLUMNS = ("algorithm", "evs", "customers", "runs",
                  "serviced_mean", "serviced_ci95",
                  "efficiency_mean", "efficiency_ci95",
                  "wall_time_mean", "wall_time_ci95")


@dataclass(frozen=True)
class Sweep:
    evs: tuple = (15,)
    customers: tuple = (10, 20, 30, 40, 50, 60, 70)
    seeds: tuple = tuple(range(20))
    base: GenConfig = field(default_factory=GenConfig)
    # grid points above this many customers get online rows only
    optimal_max_customers: Optional[int] = 200
    time_budget: Optional[float] = 30.0
    node_budget: Optional[int] = None
    cuts: bool = True
    workers: int = 1


def heuristics(seed: int) -> list[HeuristicKind]:
    return [HeuristicKind.square(), HeuristicKind.destination(), HeuristicKind.random(seed)]


def run_point(s: Scenario, seed: int, with_optimal: bool = True, time_budget: Optional[float] = 30.0,
              node_budget: Optional[int] = None, cuts: bool = True) -> list[RunMetrics]:
    """All algorithms on one scenario; online efficiencies are relative to the optimum."""
    A, C = len(s.evs), len(s.customers)
    rows = []
    best = None
    if with_optimal:
        res = solve_exact(s, time_budget=time_budget, node_budget=node_budget, cuts=cuts)
        done = res.status == OPTIMAL
        if done:
            best = res.objective
        rows.append(RunMetrics(OPTIMAL_LABEL, res.objective, C, A, seed,
                               1.0 if done and best else None, res.wall_time, res.nodes_explored,
                               res.status))
    else:
        rows.append(RunMetrics(OPTIMAL_LABEL, None, C, A, seed, status=SKIPPED))
    for kind in heuristics(seed):
        _, m = run_online(s, kind)
        eff = m.serviced / best if best else None
        rows.append(replace(m, seed=seed, efficiency_vs_optimal=eff))
    return rows


def _job(args):
    cfg, with_optimal, time_budget, node_budget, cuts = args
    return run_point(generate(cfg), cfg.seed, with_optimal, time_budget, node_budget, cuts)


def run_exp1(sweep: Sweep) -> list[RunMetrics]:
    jobs = []
    for a in sweep.evs:
        for c in sweep.customers:
            with_opt = sweep.optimal_max_customers is None or c <= sweep.optimal_max_customers
            for seed in sweep.seeds:
                cfg = replace(sweep.base, num_evs=a, num_customers=c, seed=seed)
                jobs.append((cfg, with_opt, sweep.time_budget, sweep.node_budget, sweep.cuts))
    if sweep.workers > 1:
        with ProcessPoolExecutor(sweep.workers) as pool:
            chunks = list(pool.map(_job, jobs))
    else:
        chunks = [_job(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


@dataclass(frozen=True)
class GrowthFit:
    evs: int
    customers: tuple
    mean_time: tuple
    coefficients: tuple  # highest power first, as numpy.polyfit returns them
    r2: float


@dataclass
class Exp2Result:
    rows: list
    fits: list
    notices: list


def fit_quadratic(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, float]:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    coef = np.polyfit(x, y, 2)
    resid = y - np.polyval(coef, x)
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / total if total > 0 else 1.0
    return coef, float(r2)


def growth_fits(rows: Iterable[RunMetrics]) -> tuple[list[GrowthFit], list[str]]:
    """Quadratic fit of mean optimal time vs customers, one per fleet size.

    Only the prefix of customer counts in which every optimal run finished is
    used; a point with a timed-out run ends the series.
    """
    fits, notices = [], []
    opt = [r for r in rows if r.algorithm == OPTIMAL_LABEL and r.status != SKIPPED]
    for a in sorted({r.evs for r in opt}):
        xs, ys = [], []
        for c in sorted({r.customers for r in opt if r.evs == a}):
            runs = [r for r in opt if r.evs == a and r.customers == c]
            if any(r.status != OPTIMAL for r in runs):
                notices.append(f"{a} EVs: series stops before {c} customers (unfinished optimal run)")
                break
            xs.append(c)
            ys.append(float(np.mean([r.wall_time for r in runs])))
        if len(xs) < 3:
            notices.append(f"{a} EVs: quadratic fit skipped, needs at least 3 points (have {len(xs)})")
            continue
        coef, r2 = fit_quadratic(xs, ys)
        fits.append(GrowthFit(a, tuple(xs), tuple(ys), tuple(float(v) for v in coef), r2))
    return fits, notices


def run_exp2(sweep: Sweep) -> Exp2Result:
    rows = run_exp1(sweep)
    fits, notices = growth_fits(rows)
    return Exp2Result(rows, fits, notices)


# -- output ------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def result_record(m: RunMetrics) -> list[str]:
    return [m.algorithm, _fmt(m.evs), _fmt(m.customers), _fmt(m.seed), _fmt(m.serviced),
            _fmt(m.efficiency_vs_optimal), _fmt(float(m.wall_time)), _fmt(m.nodes), m.status]


def read_results(path) -> list[dict]:
    def num(v, kind):
        return kind(v) if v != "" else None

    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append({
                "algorithm": rec["algorithm"],
                "evs": int(rec["evs"]),
                "customers": int(rec["customers"]),
                "seed": num(rec["seed"], int),
                "serviced": num(rec["serviced"], int),
                "efficiency": num(rec["efficiency"], float),
                "wall_time": num(rec["wall_time"], float),
                "nodes": num(rec["nodes"], int),
                "status": rec["status"],
            })
    return out


def _mean_ci(values) -> tuple[Optional[float], Optional[float]]:
    v = np.array([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return None, None
    if v.size == 1:
        return float(v[0]), None
    half = stats.t.ppf(0.975, v.size - 1) * v.std(ddof=1) / math.sqrt(v.size)
    return float(v.mean()), float(half)


def summarize(records: list[dict]) -> list[list[str]]:
    """Per (algorithm, evs, customers) means and 95% t-interval half-widths."""
    order = {name: i for i, name in enumerate(ALGORITHMS)}

    def key(r):
        return (r["evs"], r["customers"], order.get(r["algorithm"], len(order)), r["algorithm"])

    out = []
    for (a, c, _, alg), grp in groupby(sorted(records, key=key), key=key):
        grp = [r for r in grp if r["status"] != SKIPPED]
        if not grp:
            continue
        row = [alg, str(a), str(c), str(len(grp))]
        for col in ("serviced", "efficiency", "wall_time"):
            mean, half = _mean_ci(r[col] for r in grp)
            row += [_fmt(mean), _fmt(half)]
        out.append(row)
    return out


def emit_results(rows: Iterable[RunMetrics], out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results, series = out / "results.csv", out / "series.csv"
    with open(results, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        w.writerows(result_record(m) for m in rows)
    with open(series, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        w.writerows(summarize(read_results(results)))
    return results, series
