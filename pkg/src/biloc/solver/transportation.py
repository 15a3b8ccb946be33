"""Continuous transportation subproblem: fractional assignment of served
customers to open facilities.

Minimizes sum(cost[i, j] * w[i, j]) subject to full assignment of every
served customer (sum_i w[i, j] = 1), facility capacity over scaled loads
(sum_j load[j] * w[i, j] <= cap[i]) and w >= 0; w <= 1 is implied by the
assignment rows.  Every customer may use every open facility, so the problem
is feasible exactly when total load fits into total capacity.  A greedy
cheapest-facility pass is optimal whenever it happens to respect capacity;
otherwise the dense simplex kernel solves the compact formulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simplex import solve_dense_lp

_FEAS_TOL = 1e-9


@dataclass
class TransportResult:
    status: str  # "optimal" | "infeasible"
    cost: float
    w: np.ndarray | None  # (n_facilities, n_customers) fractions


def solve_transportation(cost: np.ndarray, loads: np.ndarray,
                         capacities: np.ndarray) -> TransportResult:
    """cost: (F, C) per-unit-of-fraction cost; loads: (C,) scaled demands;
    capacities: (F,).  Serves every customer or reports infeasibility."""
    cost = np.asarray(cost, dtype=float)
    loads = np.asarray(loads, dtype=float)
    capacities = np.asarray(capacities, dtype=float)
    F, C = cost.shape if cost.ndim == 2 else (0, 0)

    if C == 0:
        return TransportResult("optimal", 0.0, np.zeros((F, 0)))
    if F == 0:
        return TransportResult("infeasible", float("inf"), None)
    total_load = float(loads.sum())
    total_cap = float(capacities.sum())
    if total_load > total_cap * (1.0 + _FEAS_TOL) + _FEAS_TOL:
        return TransportResult("infeasible", float("inf"), None)

    # greedy: everyone to their cheapest facility; optimal if capacity holds
    choice = np.argmin(cost, axis=0)
    used = np.zeros(F)
    np.add.at(used, choice, loads)
    if np.all(used <= capacities * (1.0 + _FEAS_TOL) + _FEAS_TOL):
        w = np.zeros((F, C))
        w[choice, np.arange(C)] = 1.0
        return TransportResult("optimal", float(cost[choice, np.arange(C)].sum()), w)

    # compact LP: C assignment equalities then F capacity rows
    n = F * C
    A = np.zeros((C + F, n))
    senses = ["="] * C + ["<="] * F
    b = np.concatenate([np.ones(C), capacities])
    for j in range(C):
        A[j, j::C] = 1.0
    for i in range(F):
        A[C + i, i * C:(i + 1) * C] = loads
    result = solve_dense_lp(cost.reshape(-1), A, senses, b)
    if result.status != "optimal":
        return TransportResult("infeasible", float("inf"), None)
    w = result.x.reshape(F, C)
    return TransportResult("optimal", float(result.objective), w)
