"""Solve a :class:`MipModel` with HiGHS through ``scipy.optimize.milp``.

Only meant for small instances: it gives an answer that is independent of the
built-in branch-and-bound, which makes it a cross-check for the model rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from .mip import BINARY, MipModel


@dataclass
class MilpResult:
    status: str
    objective: Optional[float]
    values: dict


def solve_milp(m: MipModel, time_limit: Optional[float] = None) -> MilpResult:
    index = {v.name: i for i, v in enumerate(m.variables)}
    n = len(m.variables)
    c = np.zeros(n)
    for name, coef in m.objective:
        c[index[name]] += coef
    if m.sense == "max":
        c = -c

    rows, cols, vals = [], [], []
    lo, hi = [], []
    for i, con in enumerate(m.constraints):
        for name, coef in con.terms:
            rows.append(i)
            cols.append(index[name])
            vals.append(coef)
        lo.append(con.rhs if con.sense in (">=", "=") else -np.inf)
        hi.append(con.rhs if con.sense in ("<=", "=") else np.inf)

    constraints = []
    if m.constraints:
        A = coo_matrix((vals, (rows, cols)), shape=(len(m.constraints), n)).tocsr()
        constraints.append(LinearConstraint(A, lo, hi))
    integrality = np.array([1 if v.kind == BINARY else 0 for v in m.variables])
    bounds = Bounds([v.lb for v in m.variables], [v.ub for v in m.variables])
    options = {"time_limit": time_limit} if time_limit else {}
    res = milp(c, constraints=constraints, integrality=integrality, bounds=bounds, options=options)
    if res.status == 0:
        obj = float(-res.fun if m.sense == "max" else res.fun)
        return MilpResult("Optimal", obj, {v.name: float(res.x[i]) for i, v in enumerate(m.variables)})
    if res.status == 2:
        return MilpResult("Infeasible", None, {})
    return MilpResult("TimedOut" if res.status == 1 else "Error", None, {})
