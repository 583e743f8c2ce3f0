"""Capacitated facility location on the derived instance.

``solve_cfl`` is an open/close/swap local search in which every candidate
open set is priced exactly by a transportation min-cost flow.
``normalize_self_service`` then rewires a solution so every open site
covers its own demand.
"""

from __future__ import annotations

import itertools
import logging

from .core import InvariantViolation
from .mcflow import FlowNetwork, InfeasibleFlow, min_cost_flow
from .transform import CflInstance, CflSolution

log = logging.getLogger(__name__)

SOLVER_NAME = "local-search"
IMPROVE_RTOL = 1e-9


def transport(icap: CflInstance, open_sites) -> tuple[float, dict] | None:
    """Cheapest way to ship all demand to ``open_sites``; None if capacity is short."""
    opened = sorted(open_sites)
    dem = icap.demand_sites()
    total = sum(icap.sites[k].demand for k in dem)
    if total == 0:
        return 0.0, {}
    if sum(icap.sites[s].capacity for s in opened) < total:
        return None
    nd = len(dem)
    net = FlowNetwork(nd + len(opened) + 1)
    sink = nd + len(opened)
    arcs = []
    for a, k in enumerate(dem):
        net.supply[a] = icap.sites[k].demand
        for b, s in enumerate(opened):
            arcs.append((net.add_arc(a, nd + b, 0, None, float(icap.dist[k, s])), k, s))
    for b, s in enumerate(opened):
        net.add_arc(nd + b, sink, 0, icap.sites[s].capacity, 0.0)
    net.supply[sink] = -total
    try:
        res = min_cost_flow(net)
    except InfeasibleFlow:
        return None
    ship = {(k, s): res.flow[e] for e, k, s in arcs if res.flow[e] > 0}
    return res.cost, ship


def cfl_cost(icap: CflInstance, sol: CflSolution) -> float:
    return float(sum(icap.sites[s].open_cost for s in sol.open)
                 + sum(a * icap.dist[k, s] for (k, s), a in sol.ship.items()))


def facility_cost(icap: CflInstance, sol: CflSolution) -> float:
    return float(sum(icap.sites[s].open_cost for s in sol.open))


def connection_cost(icap: CflInstance, sol: CflSolution) -> float:
    return float(sum(a * icap.dist[k, s] for (k, s), a in sol.ship.items()))


def cfl_errors(icap: CflInstance, sol: CflSolution) -> list[str]:
    errs = []
    for k in range(icap.n_sites):
        site = icap.sites[k]
        if sol.received(k) != site.demand:
            errs.append(f"site {site.id} receives {sol.received(k)} of demand {site.demand}")
        out = sol.served_by(k)
        if out > site.capacity:
            errs.append(f"site {site.id} ships {out} over capacity {site.capacity}")
        if out and k not in sol.open:
            errs.append(f"closed site {site.id} ships {out}")
    return errs


def solve_cfl(icap: CflInstance, max_rounds: int = 10_000) -> CflSolution:
    """Local search over open sets; stops at a local optimum for open/close/swap moves."""
    if not icap.demand_sites():
        return CflSolution(frozenset(), {})
    cache: dict = {}

    def price(s: frozenset):
        if s not in cache:
            t = transport(icap, s)
            cache[s] = None if t is None else (
                t[0] + sum(icap.sites[k].open_cost for k in s), t[1])
        return cache[s]

    n = icap.n_sites
    cur = frozenset(range(n))
    cur_cost = price(cur)[0]
    for _ in range(max_rounds):
        best = None

        def consider(cand):
            nonlocal best
            p = price(cand)
            if p is None:
                return
            if p[0] < cur_cost - IMPROVE_RTOL * max(1.0, abs(cur_cost)):
                if best is None or p[0] < best[1] - 1e-15:
                    best = (cand, p[0])

        for k in sorted(cur):
            consider(cur - {k})
        for k in range(n):
            if k not in cur:
                consider(cur | {k})
        if best is None:
            for a, b in itertools.product(sorted(cur), range(n)):
                if b not in cur:
                    consider((cur - {a}) | {b})
        if best is None:
            break
        cur, cur_cost = best
    ship = price(cur)[1]
    # sites that ship nothing are closed; opening costs are nonnegative
    opened = frozenset(s for (_, s) in ship)
    sol = CflSolution(opened, dict(ship))
    errs = cfl_errors(icap, sol)
    if errs:
        raise InvariantViolation("local search produced an infeasible solution: " + errs[0])
    return sol


def normalize_self_service(icap: CflInstance, sol: CflSolution) -> CflSolution:
    """Rewire shipments so every open site with demand serves all of it itself.

    Each step moves an amount of i's demand from a remote server k to i.
    If i is at capacity it hands the same amount of some other demand m it
    serves over to k.  By the triangle inequality neither step raises cost.
    """
    ship = {key: a for key, a in sol.ship.items() if a > 0}
    guard = sum(s.demand for s in icap.sites) + 1
    for k in range(icap.n_sites):
        if icap.sites[k].demand > icap.sites[k].capacity:
            raise InvariantViolation(f"site {icap.sites[k].id} has demand above capacity")
    for i in sorted(sol.open):
        di = icap.sites[i].demand
        steps = 0
        while ship.get((i, i), 0) < di:
            steps += 1
            if steps > guard:
                raise InvariantViolation("self-service normalisation did not terminate")
            remote = min(s for (d, s) in ship if d == i and s != i)
            need = min(di - ship.get((i, i), 0), ship[(i, remote)])
            spare = icap.sites[i].capacity - sum(a for (_, s), a in ship.items() if s == i)
            if spare > 0:
                amt = min(need, spare)
            else:
                m = min(d for (d, s) in ship if s == i and d != i)
                amt = min(need, ship[(m, i)])
                _move(ship, (m, i), (m, remote), amt)
            _move(ship, (i, remote), (i, i), amt)
    return CflSolution(sol.open, ship)


def _move(ship, src, dst, amt):
    ship[src] -= amt
    if ship[src] == 0:
        del ship[src]
    ship[dst] = ship.get(dst, 0) + amt
