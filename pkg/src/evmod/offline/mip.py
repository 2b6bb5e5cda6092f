"""Mixed-integer model of the offline assignment problem.

Variables follow the naming scheme ``lambda[r]``, ``eps[a][r][t]``,
``prk[a][t][l]`` and ``bch[a][t]``.  The absolute values in the location
change count are linearised with ``dpos[a][t][l]``/``dneg[a][t][l]`` and two
rows per term.  Every row name starts with the tag of the constraint family it
belongs to (``Eq2`` .. ``Eq15``).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from ..model import FULL_BATTERY, Scenario

BINARY = "binary"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float = 0.0
    ub: float = 1.0


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple          # ((var name, coefficient), ...)
    sense: str            # "<=", ">=" or "="
    rhs: float

    @property
    def tag(self) -> str:
        return self.name.split("_", 1)[0]


@dataclass
class MipModel:
    variables: list = field(default_factory=list)
    objective: tuple = ()
    constraints: list = field(default_factory=list)
    sense: str = "max"

    def rows(self, tag: str) -> list:
        return [c for c in self.constraints if c.tag == tag]

    def count_by_tag(self) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        for c in self.constraints:
            out[c.tag] += 1
        return dict(out)


def lam(r):
    return f"lambda[{r}]"


def eps(a, r, t):
    return f"eps[{a}][{r}][{t}]"


def prk(a, t, l):
    return f"prk[{a}][{t}][{l}]"


def bch(a, t):
    return f"bch[{a}][{t}]"


class _Builder:
    def __init__(self):
        self.model = MipModel()

    def var(self, name, kind=BINARY, lb=0.0, ub=1.0):
        self.model.variables.append(Variable(name, kind, float(lb), float(ub)))

    def row(self, name, terms, sense, rhs):
        merged: dict[str, float] = {}
        for v, c in terms:
            merged[v] = merged.get(v, 0.0) + float(c)
        terms = tuple((v, c) for v, c in merged.items() if c != 0.0)
        if terms:
            self.model.constraints.append(Constraint(name, terms, sense, float(rhs)))


def build_model(s: Scenario, cuts: bool = True) -> MipModel:
    """Full model; ``cuts=False`` leaves out the redundant Eq15 rows."""
    A, R, T, L = len(s.evs), len(s.tasks), s.T, s.network.num_stations
    b = _Builder()
    tasks = s.tasks

    for r in range(R):
        b.var(lam(r))
    for a in range(A):
        for r in range(R):
            for t in range(T):
                b.var(eps(a, r, t))
    for a in range(A):
        for t in range(T):
            for l in range(L):
                b.var(prk(a, t, l))
    for a, ev in enumerate(s.evs):
        for t in range(T):
            b.var(bch(a, t), CONTINUOUS, 0.0, ev.charge_rate)
    for a in range(A):
        for t in range(T - 1):
            for l in range(L):
                b.var(f"dpos[{a}][{t}][{l}]", CONTINUOUS, 0.0, 1.0)
                b.var(f"dneg[{a}][{t}][{l}]", CONTINUOUS, 0.0, 1.0)

    b.model.objective = tuple((lam(r), 1.0) for r in range(R))

    for task in tasks:
        r = task.id
        window = range(task.start, task.end)
        b.row(f"Eq2_r{r}", [(eps(a, r, t), 1) for a in range(A) for t in window]
              + [(lam(r), -task.duration)], "=", 0)
        b.row(f"Eq3_r{r}", [(eps(a, r, t), 1) for a in range(A) for t in range(T)
                            if not task.start <= t < task.end], "=", 0)
    for task in tasks:
        for a in range(A):
            for t in range(task.start, task.end - 1):
                b.row(f"Eq4_a{a}_r{task.id}_t{t}", [(eps(a, task.id, t + 1), 1), (eps(a, task.id, t), -1)], "=", 0)

    for a, ev in enumerate(s.evs):
        for t in range(T):
            b.row(f"Eq5_a{a}_t{t}", [(bch(a, t), 1)] + [(prk(a, t, l), -ev.charge_rate) for l in range(L)], "<=", 0)

    for a, ev in enumerate(s.evs):
        for t in range(T):
            terms = [(bch(a, tp), 1) for tp in range(t + 1)]
            # work outside a window is pinned to zero by Eq3, so only in-window terms count
            terms += [(eps(a, task.id, tpp), -ev.consumption)
                      for task in tasks for tpp in range(task.start, min(t + 1, task.end))]
            b.row(f"Eq6_lo_a{a}_t{t}", terms, ">=", -ev.start_energy)
            b.row(f"Eq6_hi_a{a}_t{t}", terms, "<=", FULL_BATTERY - ev.start_energy)

    for c in s.customers:
        b.row(f"Eq7_c{c.id}", [(lam(r), 1) for r in c.alternatives], "<=", 1)

    for a in range(A):
        for t in range(T):
            b.row(f"Eq8_a{a}_t{t}", [(prk(a, t, l), 1) for l in range(L)]
                  + [(eps(a, r, t), 1) for r in range(R)], "=", 1)

    for a in range(A):
        terms = [(eps(a, task.id, task.start), 2) for task in tasks]
        terms += [(f"d{sgn}[{a}][{t}][{l}]", -1) for t in range(T - 1) for l in range(L) for sgn in ("pos", "neg")]
        b.row(f"Eq9_a{a}", terms, "=", 0)
        for t in range(T - 1):
            for l in range(L):
                b.row(f"Eq9_pos_a{a}_t{t}_l{l}",
                      [(f"dpos[{a}][{t}][{l}]", 1), (prk(a, t + 1, l), -1), (prk(a, t, l), 1)], ">=", 0)
                b.row(f"Eq9_neg_a{a}_t{t}_l{l}",
                      [(f"dneg[{a}][{t}][{l}]", 1), (prk(a, t + 1, l), 1), (prk(a, t, l), -1)], ">=", 0)

    for task in tasks:
        for a in range(A):
            b.row(f"Eq10_r{task.id}_a{a}", [(prk(a, task.start - 1, task.origin), 1),
                                            (eps(a, task.id, task.start), -1)], ">=", 0)
    for task in tasks:
        for a in range(A):
            b.row(f"Eq11_r{task.id}_a{a}", [(prk(a, task.end, task.dest), 1),
                                            (eps(a, task.id, task.end - 1), -1)], ">=", 0)

    for l, st in enumerate(s.network.stations):
        for t in range(T):
            b.row(f"Eq12_l{l}_t{t}", [(prk(a, t, l), 1) for a in range(A)], "<=", st.capacity)

    for a, ev in enumerate(s.evs):
        for l in range(L):
            b.row(f"Eq13_a{a}_l{l}", [(prk(a, 0, l), 1)], "=", 1 if l == ev.start_location else 0)

    for a in range(A):
        for r in range(R):
            b.row(f"Eq14_a{a}_r{r}", [(eps(a, r, 0), 1)], "=", 0)

    if cuts:
        for l in range(L):
            for t in range(1, T):
                terms = [(prk(a, t, l), 1) for a in range(A)] + [(prk(a, t - 1, l), -1) for a in range(A)]
                terms += [(lam(task.id), 1) for task in tasks if task.start == t and task.origin == l]
                terms += [(lam(task.id), -1) for task in tasks if task.end == t and task.dest == l]
                b.row(f"Eq15_l{l}_t{t}", terms, "=", 0)
    return b.model
