import copy

import numpy as np
import pytest

from builders import make_scenario, one_task, small_scenario
from evmod.feasibility import InfeasibleAssignment, check_feasibility, objective, simulate_trace
from evmod.offline.bnb import solve_exact


def tags(s, sch, **kw):
    return set(check_feasibility(s, sch, **kw).by_constraint())


def test_empty_assignment_parks_and_charges_to_full():
    s = make_scenario(6, [2, 2], [(0, 40.0), (1, 100.0)], [])
    sch = simulate_trace(s, {})
    assert sch.prk[0, :, 0].all() and not sch.prk[0, :, 1].any()
    assert sch.prk[1, :, 1].all()
    assert sch.energy[0].tolist() == [40, 65, 90, 100, 100, 100]
    assert sch.energy[1].tolist() == [100] * 6
    assert not sch.eps.any()
    assert check_feasibility(s, sch).ok


def test_single_task_trace():
    s = make_scenario(6, [10, 10], [(0, 100.0)], [(0, 1, 1, 2, 0)])
    sch = simulate_trace(s, {0: 0})
    assert np.flatnonzero(sch.eps[0, 0]).tolist() == [1, 2]
    assert np.flatnonzero(sch.prk[0, :, 1]).tolist() == [3, 4, 5]
    assert np.flatnonzero(sch.prk[0, :, 0]).tolist() == [0]
    # level entering each point: two driving points, then +25 per point up to 100
    assert sch.energy[0].tolist() == [100, 100, 90, 80, 100, 100]
    assert sch.bch[0].tolist() == [0, 0, 0, 20, 0, 0]
    assert check_feasibility(s, sch).ok


def test_partial_charge_after_trip():
    s = make_scenario(8, [10, 10], [(0, 30.0)], [(0, 1, 1, 2, 0)])
    sch = simulate_trace(s, {0: 0})
    assert sch.energy[0].tolist() == [30, 55, 45, 35, 60, 85, 100, 100]


def test_wrong_station_raises():
    s = make_scenario(4, [10, 10], [(1, 100.0)], [(0, 1, 1, 2, 0)])
    with pytest.raises(InfeasibleAssignment):
        simulate_trace(s, {0: 0})


def test_busy_ev_raises():
    s = make_scenario(6, [10, 10], [(0, 100.0)], [(0, 1, 1, 2, 0), (1, 0, 3, 1, 1)])
    # task 1 departs at 3 but the EV only arrives at 3
    with pytest.raises(InfeasibleAssignment):
        simulate_trace(s, {0: 0, 1: 0})


def test_empty_battery_raises():
    # one charging point (25) before a 3-point trip that needs 30
    s = make_scenario(6, [10, 10], [(0, 0.0)], [(0, 1, 1, 3, 0)])
    with pytest.raises(InfeasibleAssignment):
        simulate_trace(s, {0: 0})


def test_objective_counts():
    s = make_scenario(8, [10, 10, 10], [(0, 100.0)] * 3,
                      [(0, 1, 1, 1, 0), (0, 2, 1, 1, 1), (0, 1, 2, 1, 2), (0, 2, 3, 1, 3)])
    assert objective(simulate_trace(s, {})) == 0
    assert objective(simulate_trace(s, {0: 0, 1: 1, 2: 2})) == 3


def test_solve_exact_on_single_task():
    res = solve_exact(one_task())
    assert objective(res.schedule) == 1


@pytest.mark.parametrize("seed", range(100))
def test_solver_traces_pass(seed):
    s = small_scenario(seed)
    res = solve_exact(s)
    assert check_feasibility(s, res.schedule).ok


def test_two_alternatives_executed_is_eq7():
    # customer 0 has two alternatives; run both on different EVs
    s = make_scenario(4, [10, 10], [(0, 100.0), (0, 100.0)], [(0, 1, 1, 2, 0), (0, 1, 1, 1, 0)])
    sch = simulate_trace(s, {0: 0, 1: 1})
    assert tags(s, sch) == {"Eq7"}


def test_parked_twice_is_eq8():
    s = one_task()
    sch = simulate_trace(s, {})
    sch.prk[0, 2, 1] = True
    assert "Eq8" in tags(s, sch)


def test_capacity_is_eq12():
    s = make_scenario(4, [2, 1], [(0, 100.0), (0, 100.0)], [(0, 1, 1, 1, 0), (0, 1, 1, 1, 1)])
    sch = simulate_trace(s, {0: 0, 1: 1})
    assert tags(s, sch) == {"Eq12"}


def test_tampered_schedules_are_tagged():
    s = make_scenario(6, [10, 10], [(0, 100.0)], [(0, 1, 1, 2, 0)])
    base = simulate_trace(s, {0: 0})

    def tamper(fn):
        sch = copy.deepcopy(base)
        fn(sch)
        return tags(s, sch)

    def drop_work(x):
        x.eps[0, 0, 2] = False
        x.prk[0, 2, 1] = True
    assert "Eq2" in tamper(drop_work)

    def late_work(x):
        x.eps[0, 0, 4] = True
    assert "Eq3" in tamper(late_work)

    def charge_driving(x):
        x.bch[0, 1] = 5.0
    assert "Eq5" in tamper(charge_driving)

    def wrong_energy(x):
        x.energy[0, 3] = 70.0
    assert tamper(wrong_energy) == {"Eq6"}

    def overcharge(x):
        x.bch[0, 0] = 5.0
    assert "Eq6" in tamper(overcharge)

    def skip_start(x):
        x.prk[0, 0] = [False, True]
    assert "Eq13" in tamper(skip_start)

    def wrong_arrival(x):
        x.prk[0, 3] = [True, False]
    assert "Eq11" in tamper(wrong_arrival)


def test_work_at_zero_is_eq14():
    s = one_task()
    sch = simulate_trace(s, {})
    sch.eps[0, 0, 0] = True
    sch.prk[0, 0, 0] = False
    assert "Eq14" in tags(s, sch)


def test_flow_rows_follow_cuts_flag():
    # lambda claims a task nobody drives: only the flow rows and Eq2 notice
    s = one_task()
    sch = simulate_trace(s, {})
    sch.lam[0] = True
    assert "Eq15" in tags(s, sch)
    assert "Eq15" not in tags(s, sch, cuts=False)


def test_shape_mismatch_rejected():
    s = one_task()
    sch = simulate_trace(small_scenario(3), {})
    with pytest.raises(ValueError):
        check_feasibility(s, sch)
