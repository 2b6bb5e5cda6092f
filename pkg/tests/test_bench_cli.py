import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from evmod import bench
from evmod.bench import (RESULT_COLUMNS, SERIES_COLUMNS, Sweep, emit_results, fit_quadratic,
                         growth_fits, read_results, run_exp1, run_exp2, summarize)
from evmod.cli import main
from evmod.generate import GenConfig
from evmod.model import RunMetrics, load_schedule, save_schedule


def small_sweep(**kw):
    base = dict(evs=(4,), customers=(0, 6), seeds=tuple(range(3)),
                base=GenConfig(num_time_points=20))
    base.update(kw)
    return Sweep(**base)


def rows_of(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_zero_customers_all_zero():
    rows = run_exp1(small_sweep(customers=(0,)))
    assert {r.algorithm for r in rows} == set(bench.ALGORITHMS)
    assert all(r.serviced == 0 for r in rows)


def test_exp1_rows_and_invariants():
    rows = run_exp1(small_sweep(customers=(6, 12), seeds=tuple(range(4))))
    assert len(rows) == 4 * 2 * 4
    by_key = {}
    for r in rows:
        assert r.serviced <= r.customers
        if r.efficiency_vs_optimal is not None:
            assert 0.0 <= r.efficiency_vs_optimal <= 1.0
        by_key.setdefault((r.customers, r.seed), {})[r.algorithm] = r
    for runs in by_key.values():
        opt = runs["Optimal"]
        assert opt.status == "Optimal" and opt.nodes is not None
        for name in ("Square", "Destination", "Random"):
            assert runs[name].serviced <= opt.serviced


def test_large_point_is_online_only():
    base = GenConfig(num_time_points=100, station_capacity=15)
    rows = run_exp1(Sweep(evs=(100,), customers=(1200,), seeds=(0,), base=base))
    opt = [r for r in rows if r.algorithm == "Optimal"]
    assert len(opt) == 1 and opt[0].status == bench.SKIPPED and opt[0].serviced is None
    online = [r for r in rows if r.algorithm != "Optimal"]
    assert len(online) == 3
    assert all(r.efficiency_vs_optimal is None and r.wall_time > 0 for r in online)


def test_budget_exhaustion_is_recorded():
    rows = run_exp1(small_sweep(customers=(12,), seeds=(0,), node_budget=1))
    opt = [r for r in rows if r.algorithm == "Optimal"][0]
    assert opt.status == "TimedOut"
    assert all(r.efficiency_vs_optimal is None for r in rows if r.algorithm != "Optimal")


def test_parallel_matches_serial():
    sweep = small_sweep(customers=(6,), seeds=tuple(range(4)))
    strip = lambda rows: [replace(r, wall_time=0.0) for r in rows]  # noqa: E731
    assert strip(run_exp1(sweep)) == strip(run_exp1(replace(sweep, workers=2)))


def test_empty_table_header_only(tmp_path):
    results, series = emit_results([], tmp_path)
    assert rows_of(results) == [list(RESULT_COLUMNS)]
    assert rows_of(series) == [list(SERIES_COLUMNS)]


def test_thirty_rows(tmp_path):
    rows = [r for r in run_exp1(small_sweep(customers=(6, 12), seeds=tuple(range(5))))
            if r.algorithm != "Optimal"]
    results, series = emit_results(rows, tmp_path)
    assert len(rows_of(results)) == 1 + 30
    assert len(rows_of(series)) == 1 + 3 * 2


def test_same_table_same_bytes(tmp_path):
    rows = run_exp1(small_sweep())
    a = emit_results(rows, tmp_path / "a")
    b = emit_results(rows, tmp_path / "b")
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_series_is_function_of_results(tmp_path):
    rows = run_exp1(small_sweep(customers=(6,), seeds=tuple(range(5))))
    results, series = emit_results(rows, tmp_path)
    assert rows_of(series)[1:] == summarize(read_results(results))
    recs = read_results(results)
    sq = [r for r in recs if r["algorithm"] == "Square"]
    line = [row for row in rows_of(series) if row[0] == "Square"][0]
    vals = np.array([r["serviced"] for r in sq], dtype=float)
    assert float(line[4]) == pytest.approx(vals.mean(), abs=1e-6)
    from scipy import stats
    half = stats.t.ppf(0.975, len(vals) - 1) * vals.std(ddof=1) / np.sqrt(len(vals))
    assert float(line[5]) == pytest.approx(half, abs=1e-6)


def test_fit_recovers_quadratic():
    x = np.arange(10, 80, 10)
    coef, r2 = fit_quadratic(x, 2e-5 * x ** 2 + 1e-3 * x + 0.01)
    assert r2 == pytest.approx(1.0)
    assert coef[0] == pytest.approx(2e-5)


def test_fit_needs_three_points():
    out = run_exp2(small_sweep(customers=(6,), seeds=(0,)))
    assert out.fits == []
    assert any("needs at least 3 points" in n for n in out.notices)


def test_growth_prefix_stops_at_unfinished_point():
    def row(c, status):
        return RunMetrics("Optimal", 1, c, 15, 0, None, c * 0.001 + (c / 100) ** 2, 1, status)
    rows = [row(c, "Optimal") for c in (10, 20, 30, 40)] + [row(50, "TimedOut"), row(60, "Optimal")]
    fits, notices = growth_fits(rows)
    assert fits[0].customers == (10, 20, 30, 40)
    assert any("stops before 50" in n for n in notices)


# -- command line ---------------------------------------------------------------

@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "s.json"
    assert main(["gen", "--out", str(path), "--customers", "20", "--seed", "2"]) == 0
    return path


@pytest.mark.parametrize("algo", ["optimal", "square", "destination", "random"])
def test_cli_solve_and_check(algo, scenario_file, tmp_path, capsys):
    out = tmp_path / f"{algo}.json"
    args = ["solve", "--algo", algo, "--scenario", str(scenario_file), "--out", str(out)]
    if algo == "random":
        args += ["--seed", "5"]
    assert main(args) == 0
    assert main(["check", "--scenario", str(scenario_file), "--schedule", str(out)]) == 0
    assert "feasible" in capsys.readouterr().out


def test_cli_optimal_flags(scenario_file, capsys):
    assert main(["solve", "--algo", "optimal", "--scenario", str(scenario_file), "--no-cuts",
                 "--time-budget", "10", "--node-budget", "100000"]) == 0
    assert "status=Optimal" in capsys.readouterr().out


def test_cli_decision_log(scenario_file, tmp_path):
    log = tmp_path / "d.jsonl"
    assert main(["solve", "--algo", "square", "--scenario", str(scenario_file),
                 "--decisions", str(log)]) == 0
    recs = [json.loads(line) for line in log.read_text().splitlines()]
    assert len(recs) == 20
    assert {"t", "customer", "feasible", "scores", "accepted"} <= set(recs[0])


def test_cli_check_reports_violations(scenario_file, tmp_path, capsys):
    out = tmp_path / "o.json"
    main(["solve", "--algo", "optimal", "--scenario", str(scenario_file), "--out", str(out)])
    sch = load_schedule(out)
    sch.bch[0, 0] = 30.0
    save_schedule(sch, out)
    assert main(["check", "--scenario", str(scenario_file), "--schedule", str(out)]) == 0
    assert "infeasible" in capsys.readouterr().out
    assert main(["check", "--scenario", str(scenario_file), "--schedule", str(out), "--strict"]) == 1


def test_cli_export_lp(scenario_file, tmp_path):
    lp = tmp_path / "m.lp"
    assert main(["export-lp", "--scenario", str(scenario_file), "--out", str(lp)]) == 0
    text = lp.read_text()
    assert text.startswith("\\") and "Subject To" in text and text.rstrip().endswith("End")


def test_cli_experiments(tmp_path, capsys):
    common = ["--evs", "4", "--seeds", "2", "--points", "20"]
    assert main(["exp1", "--customers", "0", "5", "--out", str(tmp_path / "e1")] + common) == 0
    assert len(rows_of(tmp_path / "e1" / "results.csv")) == 1 + 4 * 2 * 2
    assert main(["exp2", "--customers", "4", "6", "8", "--out", str(tmp_path / "e2")] + common) == 0
    fit = json.loads((tmp_path / "e2" / "fit.json").read_text())
    assert len(fit["fits"]) == 1 and "r2" in fit["fits"][0]
    assert "R^2" in capsys.readouterr().out


def test_cli_errors_exit_nonzero(tmp_path):
    assert main(["solve", "--algo", "square", "--scenario", str(tmp_path / "missing.json")]) == 1
    assert main(["gen", "--out", str(tmp_path / "x.json"), "--evs", "500"]) == 1
    with pytest.raises(SystemExit):
        main(["solve", "--algo", "cplex", "--scenario", "x"])
