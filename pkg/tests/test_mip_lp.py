import numpy as np
import pytest

from builders import make_scenario, one_task, small_scenario
from evmod.feasibility import check_feasibility, simulate_trace
from evmod.model import Schedule
from evmod.offline.bnb import solve_exact
from evmod.offline.lpfile import (export_lp, format_lp, from_lp_name, parse_lp, read_lp,
                                  to_lp_name)
from evmod.offline.milp import solve_milp
from evmod.offline.mip import BINARY, build_model

# Index sets of the 1-EV / 1-task (start 1, duration 2) / T=4 / L=2 instance.
HAND_ROWS = {
    "Eq2": 1,            # one task
    "Eq3": 1,            # eps outside [1, 3): t = 0 and 3 share one row
    "Eq4": 1,            # t = 1 only
    "Eq5": 4,            # a x t
    "Eq6": 8,            # a x t, lower and upper
    "Eq7": 1,            # one customer
    "Eq8": 4,            # a x t
    "Eq9": 1 + 12,       # count row + 2 x a x (T-1) x L linearisation rows
    "Eq10": 1,
    "Eq11": 1,
    "Eq12": 8,           # L x T
    "Eq13": 2,           # a x L
    "Eq14": 1,           # a x r
    "Eq15": 6,           # L x (T-1)
}


def test_hand_counted_variables():
    m = build_model(one_task())
    core = 1 + 1 * 1 * 4 + 1 * 4 * 2 + 1 * 4
    aux = 2 * 1 * 3 * 2
    assert len(m.variables) == core + aux == 29
    kinds = [v.kind for v in m.variables]
    assert kinds.count(BINARY) == 1 + 4 + 8


def test_hand_counted_rows():
    m = build_model(one_task())
    assert m.count_by_tag() == HAND_ROWS
    assert len(m.constraints) == sum(HAND_ROWS.values()) == 52


def test_customer_row_name():
    m = build_model(one_task())
    assert [c.name for c in m.rows("Eq7")] == ["Eq7_c0"]
    assert "Eq7_c0:" in format_lp(m)


def test_no_tasks_model():
    s = make_scenario(4, [2, 2], [(0, 100.0)], [])
    m = build_model(s)
    assert m.objective == ()
    assert len(m.rows("Eq12")) == 8 and len(m.rows("Eq13")) == 2
    text = format_lp(m)
    assert " obj: 0" in text
    back = parse_lp(text)
    assert back == m


@pytest.mark.parametrize("seed", range(10))
def test_cuts_toggle_removes_only_flow_rows(seed):
    s = small_scenario(seed)
    full, bare = build_model(s), build_model(s, cuts=False)
    assert bare.constraints == [c for c in full.constraints if c.tag != "Eq15"]
    assert bare.variables == full.variables


@pytest.mark.parametrize("seed", range(20))
def test_lp_round_trip(seed, tmp_path):
    m = build_model(small_scenario(seed))
    export_lp(m, tmp_path / "m.lp")
    assert read_lp(tmp_path / "m.lp") == m


def test_lp_names():
    assert to_lp_name("eps[0][1][2]") == "eps(0,1,2)"
    assert from_lp_name("eps(0,1,2)") == "eps[0][1][2]"
    assert from_lp_name("lambda(7)") == "lambda[7]"


def values_from_schedule(s, sch):
    vals = {}
    A, R, T, L = sch.eps.shape[0], sch.eps.shape[1], sch.eps.shape[2], sch.prk.shape[2]
    for r in range(R):
        vals[f"lambda[{r}]"] = float(sch.lam[r])
    for a, r, t in np.ndindex(A, R, T):
        vals[f"eps[{a}][{r}][{t}]"] = float(sch.eps[a, r, t])
    for a, t, l in np.ndindex(A, T, L):
        vals[f"prk[{a}][{t}][{l}]"] = float(sch.prk[a, t, l])
    for a, t in np.ndindex(A, T):
        vals[f"bch[{a}][{t}]"] = float(sch.bch[a, t])
    diff = np.diff(sch.prk.astype(int), axis=1)
    for a, t, l in np.ndindex(A, T - 1, L):
        vals[f"dpos[{a}][{t}][{l}]"] = float(max(diff[a, t, l], 0))
        vals[f"dneg[{a}][{t}][{l}]"] = float(max(-diff[a, t, l], 0))
    return vals


def broken_rows(m, vals, tol=1e-7):
    bad = []
    for c in m.constraints:
        lhs = sum(coef * vals[v] for v, coef in c.terms)
        ok = {"<=": lhs <= c.rhs + tol, ">=": lhs >= c.rhs - tol, "=": abs(lhs - c.rhs) <= tol}[c.sense]
        if not ok:
            bad.append(c.name)
    for v in m.variables:
        if not v.lb - tol <= vals[v.name] <= v.ub + tol:
            bad.append(v.name)
    return bad


@pytest.mark.parametrize("seed", range(30))
def test_solver_schedules_satisfy_model_rows(seed):
    s = small_scenario(seed)
    sch = solve_exact(s).schedule
    assert broken_rows(build_model(s), values_from_schedule(s, sch)) == []


def test_infeasible_schedule_breaks_model_rows():
    s = make_scenario(4, [2, 1], [(0, 100.0), (0, 100.0)], [(0, 1, 1, 1, 0), (0, 1, 1, 1, 1)])
    sch = simulate_trace(s, {0: 0, 1: 1})
    bad = broken_rows(build_model(s), values_from_schedule(s, sch))
    assert bad and all(name.startswith("Eq12") for name in bad)


def schedule_from_values(s, vals) -> Schedule:
    A, R, T, L = len(s.evs), len(s.tasks), s.T, s.network.num_stations
    lam = np.array([vals[f"lambda[{r}]"] > 0.5 for r in range(R)], dtype=bool)
    eps = np.zeros((A, R, T), dtype=bool)
    prk = np.zeros((A, T, L), dtype=bool)
    bch = np.zeros((A, T))
    for a, r, t in np.ndindex(A, R, T):
        eps[a, r, t] = vals[f"eps[{a}][{r}][{t}]"] > 0.5
    for a, t, l in np.ndindex(A, T, L):
        prk[a, t, l] = vals[f"prk[{a}][{t}][{l}]"] > 0.5
    for a, t in np.ndindex(A, T):
        bch[a, t] = max(vals[f"bch[{a}][{t}]"], 0.0)
    con = np.array([ev.consumption for ev in s.evs])
    e0 = np.array([ev.start_energy for ev in s.evs])
    level = e0[:, None] + np.cumsum(bch - con[:, None] * eps.sum(axis=1), axis=1)
    energy = np.concatenate([e0[:, None], level[:, :-1]], axis=1)
    assignment = {int(r): int(np.flatnonzero(eps[:, r].any(axis=1))[0]) for r in np.flatnonzero(lam)}
    return Schedule(lam, assignment, eps, prk, bch, energy)


@pytest.mark.parametrize("seed", range(40))
def test_milp_matches_branch_and_bound(seed):
    s = small_scenario(seed)
    m = build_model(s)
    res = solve_milp(m, time_limit=60)
    assert res.status == "Optimal"
    assert round(res.objective) == solve_exact(s).objective
    # the solver's own (not necessarily max-charge) schedule also passes the checker
    rep = check_feasibility(s, schedule_from_values(s, res.values))
    assert rep.ok, rep.by_constraint()


@pytest.mark.parametrize("seed", range(20))
def test_flow_rows_do_not_change_optimum(seed):
    s = small_scenario(seed)
    with_rows = solve_milp(build_model(s), time_limit=60)
    without = solve_milp(build_model(s, cuts=False), time_limit=60)
    assert round(with_rows.objective) == round(without.objective) == solve_exact(s).objective
