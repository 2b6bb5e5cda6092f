"""Exhaustive reference optimum for tiny instances."""

from __future__ import annotations

import itertools

from ..feasibility import InfeasibleAssignment, check_feasibility, simulate_trace
from ..model import Scenario

MAX_CUSTOMERS = 8
MAX_EVS = 4


class InstanceTooLarge(ValueError):
    pass


def brute_force_oracle(s: Scenario) -> int:
    """Largest number of customers any assignment can serve.

    Every mapping customer -> reject | (alternative, EV) is a candidate; each
    one is judged only by ``simulate_trace`` + ``check_feasibility``.  Subsets
    of served customers are tried largest first so the first feasible size
    found is the answer.  The overlap filter below only skips mappings that
    put one EV on two trips at once, which the checker would reject anyway.
    """
    if len(s.customers) > MAX_CUSTOMERS or len(s.evs) > MAX_EVS:
        raise InstanceTooLarge(f"{len(s.customers)} customers / {len(s.evs)} EVs exceed "
                               f"{MAX_CUSTOMERS} / {MAX_EVS}")
    n = len(s.customers)
    evs = range(len(s.evs))
    for size in range(n, 0, -1):
        for served in itertools.combinations(range(n), size):
            choices = [[(r, a) for r in s.customers[i].alternatives for a in evs] for i in served]
            for combo in itertools.product(*choices):
                if _overlaps(s, combo):
                    continue
                try:
                    sch = simulate_trace(s, dict(combo))
                except InfeasibleAssignment:
                    continue
                if check_feasibility(s, sch).ok:
                    return size
    return 0


def _overlaps(s, combo) -> bool:
    busy: dict[int, list[tuple[int, int]]] = {}
    for r, a in combo:
        t = s.tasks[r]
        # occupied from the point before departure through arrival
        span = (t.start - 1, t.end)
        for lo, hi in busy.get(a, ()):
            if span[0] < hi and lo < span[1]:
                return True
        busy.setdefault(a, []).append(span)
    return False
