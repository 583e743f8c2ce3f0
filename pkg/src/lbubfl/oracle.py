"""Exact solvers for desk-sized instances, by enumerating open sets.

Every open set is priced with a bounded min-cost flow, so these are the
reference optima the approximation is measured against.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import InfeasibleError, Instance, ParameterError, Solution, cost
from .mcflow import InfeasibleFlow, _bounded_assignment
from .transform import CflInstance, I2Instance

MAX_FACILITIES = 12


def _cap(n: int, what: str):
    if n > MAX_FACILITIES:
        raise ParameterError(f"exact {what} limited to {MAX_FACILITIES} facilities, got {n}")


def _best_over_subsets(dist_fc, open_cost, n_clients, lower, upper, forced=()):
    nf = len(open_cost)
    forced = set(forced)
    free = [i for i in range(nf) if i not in forced]
    best = None
    for r in range(len(free) + 1):
        for extra in itertools.combinations(free, r):
            opened = sorted(forced.union(extra))
            k = len(opened)
            if k == 0 or not k * lower <= n_clients <= k * upper:
                continue
            fcost = float(open_cost[opened].sum())
            if best is not None and fcost >= best[0]:
                continue
            try:
                assign = _bounded_assignment(dist_fc, opened, {i: lower for i in opened},
                                             {i: upper for i in opened})
            except InfeasibleFlow:
                continue
            total = fcost + float(sum(dist_fc[i, j] for j, i in enumerate(assign)))
            if best is None or total < best[0]:
                best = (total, opened, assign)
    return best


def exact_lbubfl(inst: Instance) -> Solution:
    """Cheapest solution with every open load in [L, U]."""
    _cap(inst.n_facilities, "LBUBFL")
    best = _best_over_subsets(inst.fc, inst.open_cost, inst.n_clients, inst.lower, inst.upper)
    if best is None:
        raise InfeasibleError("no open set admits loads in [L, U]")
    sol = Solution(frozenset(best[1]), tuple(best[2]))
    assert abs(cost(inst, sol) - best[0]) <= 1e-9 * max(1.0, best[0])
    return sol


def exact_lbubfl_cost(inst: Instance) -> float:
    return cost(inst, exact_lbubfl(inst))


def exact_lbfl(i2: I2Instance) -> float:
    """Optimal cost of the zero-cost, lower-bounded-only instance."""
    _cap(len(i2.facilities), "LBFL")
    inst = i2.as_instance()
    best = _best_over_subsets(inst.fc, inst.open_cost, inst.n_clients, inst.lower,
                              inst.n_clients)
    if best is None:
        raise InfeasibleError("fewer clients than L")
    return best[0]


def exact_cfl(icap: CflInstance) -> float:
    """Optimal capacitated cost; zero-cost sites are kept open since they never hurt."""
    from .cfl import transport

    _cap(icap.n_sites, "CFL")
    if not icap.demand_sites():
        return 0.0
    costs = np.array([s.open_cost for s in icap.sites])
    forced = [k for k in range(icap.n_sites) if costs[k] == 0]
    free = [k for k in range(icap.n_sites) if costs[k] > 0]
    best = None
    for r in range(len(free) + 1):
        for extra in itertools.combinations(free, r):
            opened = forced + list(extra)
            fcost = float(costs[list(extra)].sum())
            if best is not None and fcost >= best:
                continue
            t = transport(icap, opened)
            if t is not None and (best is None or fcost + t[0] < best):
                best = fcost + t[0]
    if best is None:
        raise InfeasibleError("total capacity is below total demand")
    return best
