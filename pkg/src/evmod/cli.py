"""``evmod`` command line: scenario generation, solving, sweeps, LP export, checking."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import bench
from .feasibility import check_feasibility
from .generate import GenConfig, generate, load_stations
from .model import load_schedule, load_scenario, save_schedule, save_scenario
from .offline.bnb import solve_exact
from .offline.lpfile import export_lp
from .offline.mip import build_model
from .online import HeuristicKind, run_online


def _gen_args(p: argparse.ArgumentParser, sweep: bool = False):
    g = p.add_argument_group("scenario")
    d = GenConfig()
    g.add_argument("--stations", type=int, default=d.num_stations, help="number of stations")
    g.add_argument("--station-file", type=Path, help="CSV with id,name,lat,lon,capacity")
    g.add_argument("--capacity", type=int, default=d.station_capacity)
    g.add_argument("--points", type=int, default=d.num_time_points, help="time points in the horizon")
    g.add_argument("--minutes", type=float, default=d.minutes_per_point, help="minutes per point")
    if not sweep:
        g.add_argument("--evs", type=int, default=d.num_evs)
        g.add_argument("--customers", type=int, default=d.num_customers)
        g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--max-alternatives", type=int, default=d.max_alternatives)
    g.add_argument("--consumption", type=float, default=d.consumption)
    g.add_argument("--charge-rate", type=float, default=d.charge_rate)
    g.add_argument("--speed", type=float, default=d.avg_speed_kmh, help="average speed, km/h")
    g.add_argument("--min-trip-duration", type=int, default=d.min_trip_duration)
    g.add_argument("--random-start-energy", action="store_true", help="initial charge uniform in 0..100")
    g.add_argument("--independent-starts", action="store_true",
                   help="draw a departure time per alternative instead of one per customer")
    g.add_argument("--arrival-lead", type=int, default=d.arrival_lead,
                   help="points a request may precede its earliest departure (-1: any earlier point)")


def _config(ns, **over) -> GenConfig:
    stations = tuple(load_stations(ns.station_file)) if ns.station_file else None
    kw = dict(
        num_stations=len(stations) if stations else ns.stations,
        station_capacity=ns.capacity,
        num_time_points=ns.points,
        minutes_per_point=ns.minutes,
        max_alternatives=ns.max_alternatives,
        consumption=ns.consumption,
        charge_rate=ns.charge_rate,
        avg_speed_kmh=ns.speed,
        min_trip_duration=ns.min_trip_duration,
        start_energy=None if ns.random_start_energy else 100.0,
        shared_start=not ns.independent_starts,
        arrival_lead=None if ns.arrival_lead < 0 else ns.arrival_lead,
        stations=stations,
    )
    if hasattr(ns, "evs") and not isinstance(ns.evs, list):
        kw.update(num_evs=ns.evs, num_customers=ns.customers, seed=ns.seed)
    kw.update(over)
    return GenConfig(**kw)


def cmd_gen(ns) -> int:
    s = generate(_config(ns))
    save_scenario(s, ns.out)
    print(f"wrote {ns.out}: {len(s.stations)} stations, {len(s.evs)} EVs, "
          f"{len(s.customers)} customers, {len(s.tasks)} tasks")
    return 0


def cmd_solve(ns) -> int:
    s = load_scenario(ns.scenario)
    if ns.algo == "optimal":
        res = solve_exact(s, time_budget=ns.time_budget, node_budget=ns.node_budget, cuts=not ns.no_cuts)
        sch = res.schedule
        print(f"Optimal status={res.status} serviced={res.objective}/{len(s.customers)} "
              f"nodes={res.nodes_explored} time={res.wall_time:.4f}s")
    else:
        seed = ns.seed if ns.seed is not None else (s.seed or 0)
        kind = {"square": HeuristicKind.square(), "destination": HeuristicKind.destination(),
                "random": HeuristicKind.random(seed)}[ns.algo]
        log = open(ns.decisions, "w") if ns.decisions else None
        try:
            def emit(dec, t):
                if log is not None:
                    rec = {"t": t, "customer": dec.customer, "feasible": len(dec.scores),
                           "scores": {str(k): v for k, v in dec.scores.items()},
                           "accepted": dec.accepted, "task": dec.task, "ev": dec.ev}
                    log.write(json.dumps(rec) + "\n")

            sch, m = run_online(s, kind, emit)
        finally:
            if log is not None:
                log.close()
        print(f"{m.algorithm} serviced={m.serviced}/{m.customers} time={m.wall_time:.4f}s")
    if ns.out:
        save_schedule(sch, ns.out)
    return 0


def cmd_check(ns) -> int:
    s = load_scenario(ns.scenario)
    sch = load_schedule(ns.schedule)
    rep = check_feasibility(s, sch)
    if rep.ok:
        print(f"feasible: {int(sch.lam.sum())} tasks executed")
        return 0
    print(f"infeasible: {len(rep.violations)} violations")
    for name, n in sorted(rep.by_constraint().items()):
        print(f"  {name}: {n}")
    for v in rep.violations[:ns.show]:
        print(f"  {v.constraint} {v.index}: {v.detail}")
    return 1 if ns.strict else 0


def cmd_export_lp(ns) -> int:
    s = load_scenario(ns.scenario)
    m = build_model(s, cuts=not ns.no_cuts)
    export_lp(m, ns.out)
    print(f"wrote {ns.out}: {len(m.variables)} variables, {len(m.constraints)} constraints")
    return 0


def _sweep(ns) -> bench.Sweep:
    return bench.Sweep(
        evs=tuple(ns.evs), customers=tuple(ns.customers), seeds=tuple(range(ns.seed0, ns.seed0 + ns.seeds)),
        base=_config(ns), optimal_max_customers=None if ns.optimal_max_customers < 0 else ns.optimal_max_customers,
        time_budget=ns.time_budget, node_budget=ns.node_budget, cuts=not ns.no_cuts, workers=ns.workers)


def cmd_exp1(ns) -> int:
    rows = bench.run_exp1(_sweep(ns))
    results, series = bench.emit_results(rows, ns.out)
    print(f"wrote {results} ({len(rows)} runs) and {series}")
    return 0


def cmd_exp2(ns) -> int:
    out = bench.run_exp2(_sweep(ns))
    results, series = bench.emit_results(out.rows, ns.out)
    for note in out.notices:
        print(note)
    fits = [asdict(f) for f in out.fits]
    for f in out.fits:
        a2, a1, a0 = f.coefficients
        print(f"{f.evs} EVs: time ~ {a2:.3e} c^2 + {a1:.3e} c + {a0:.3e}  R^2 = {f.r2:.4f}")
    Path(ns.out, "fit.json").write_text(json.dumps({"fits": fits, "notices": out.notices}, indent=1) + "\n")
    print(f"wrote {results}, {series} and fit.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evmod", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a random scenario")
    _gen_args(g)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve a scenario exactly or online")
    s.add_argument("--algo", choices=("optimal", "square", "destination", "random"), required=True)
    s.add_argument("--scenario", type=Path, required=True)
    s.add_argument("--seed", type=int, help="seed for the random heuristic")
    s.add_argument("--time-budget", type=float, default=30.0, help="seconds (optimal only)")
    s.add_argument("--node-budget", type=int, help="search nodes (optimal only)")
    s.add_argument("--no-cuts", action="store_true", help="disable the LP bound in the exact search")
    s.add_argument("--out", type=Path, help="write the schedule as JSON")
    s.add_argument("--decisions", type=Path, help="write one JSON line per online decision")
    s.set_defaults(func=cmd_solve)

    for name, func in (("exp1", cmd_exp1), ("exp2", cmd_exp2)):
        e = sub.add_parser(name, help="service-quality sweep" if name == "exp1" else "runtime sweep")
        e.add_argument("--evs", type=int, nargs="+", default=[15])
        e.add_argument("--customers", type=int, nargs="+", default=[10, 20, 30, 40, 50, 60, 70])
        e.add_argument("--seeds", type=int, default=20, help="number of seeds per grid point")
        e.add_argument("--seed0", type=int, default=0, help="first seed")
        e.add_argument("--out", type=Path, required=True, help="output directory")
        e.add_argument("--time-budget", type=float, default=30.0)
        e.add_argument("--node-budget", type=int)
        e.add_argument("--no-cuts", action="store_true")
        e.add_argument("--optimal-max-customers", type=int, default=200,
                       help="skip the exact solver above this many customers (-1: never skip)")
        e.add_argument("--workers", type=int, default=1)
        _gen_args(e, sweep=True)
        e.set_defaults(func=func)

    x = sub.add_parser("export-lp", help="write the assignment model in CPLEX LP format")
    x.add_argument("--scenario", type=Path, required=True)
    x.add_argument("--out", type=Path, required=True)
    x.add_argument("--no-cuts", action="store_true", help="leave out the flow-conservation rows")
    x.set_defaults(func=cmd_export_lp)

    c = sub.add_parser("check", help="feasibility report for a schedule")
    c.add_argument("--scenario", type=Path, required=True)
    c.add_argument("--schedule", type=Path, required=True)
    c.add_argument("--show", type=int, default=20, help="violations to list")
    c.add_argument("--strict", action="store_true", help="exit 1 when the schedule is infeasible")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except (ValueError, OSError, KeyError) as exc:
        print(f"evmod {ns.cmd}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
