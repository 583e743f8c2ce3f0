"""Integral min-cost flow with arc lower/upper bounds.

Lower bounds are removed by shifting them into node supplies, negative-cost
arcs are pre-saturated so every residual arc starts with a nonnegative
cost, and the remaining problem is solved by successive shortest paths
with Dijkstra and node potentials.

Arc costs are compared in fixed point: each cost is rounded to an integer
number of ``COST_SCALE`` units, so path selection is exact and repeatable.
The reported total is recomputed from the original real costs.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .core import InfeasibleError

COST_SCALE = 1e9


class InfeasibleFlow(InfeasibleError):
    """No integral flow satisfies the supplies and arc bounds."""


@dataclass
class Arc:
    tail: int
    head: int
    lower: int = 0
    upper: int | None = None  # None = uncapacitated
    cost: float = 0.0


@dataclass
class FlowNetwork:
    n_nodes: int
    arcs: list[Arc] = field(default_factory=list)
    supply: list[int] | None = None

    def __post_init__(self):
        if self.supply is None:
            self.supply = [0] * self.n_nodes

    def add_arc(self, tail, head, lower=0, upper=None, cost=0.0) -> int:
        self.arcs.append(Arc(tail, head, lower, upper, cost))
        return len(self.arcs) - 1

    def validate(self):
        if len(self.supply) != self.n_nodes:
            raise ValueError("supply vector length must equal n_nodes")
        if sum(self.supply) != 0:
            raise ValueError(f"supplies sum to {sum(self.supply)}, expected 0")
        for k, a in enumerate(self.arcs):
            if not (0 <= a.tail < self.n_nodes and 0 <= a.head < self.n_nodes):
                raise ValueError(f"arc {k} references an unknown node")
            if a.lower < 0 or (a.upper is not None and a.upper < a.lower):
                raise ValueError(f"arc {k} has bounds [{a.lower}, {a.upper}]")
            if not math.isfinite(a.cost):
                raise ValueError(f"arc {k} has a non-finite cost")


@dataclass
class FlowResult:
    flow: list[int]
    cost: float


class _Residual:
    __slots__ = ("head", "cap", "cost", "adj")

    def __init__(self, n):
        self.head: list[int] = []
        self.cap: list[int] = []
        self.cost: list[int] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    def add(self, u, v, cap, cost) -> int:
        e = len(self.head)
        self.head += [v, u]
        self.cap += [cap, 0]
        self.cost += [cost, -cost]
        self.adj[u].append(e)
        self.adj[v].append(e + 1)
        return e


def min_cost_flow(net: FlowNetwork) -> FlowResult:
    """Cheapest integral flow meeting every supply and arc bound.

    Raises :class:`InfeasibleFlow` when no such flow exists.  Cost
    minimality is among integral flows; with integer data this is also the
    LP optimum.
    """
    net.validate()
    n = net.n_nodes
    b = list(net.supply)
    big = sum(s for s in b if s > 0) + sum(a.lower for a in net.arcs) + 1
    res = _Residual(n + 2)
    src, snk = n, n + 1
    base = []  # flow already fixed on each arc before augmentation
    handles = []
    for a in net.arcs:
        cap = (a.upper if a.upper is not None else big) - a.lower
        c = int(round(a.cost * COST_SCALE))
        shift = a.lower
        if c < 0:
            # saturate now; the reverse residual arc carries cost -c > 0
            shift += cap
            e = res.add(a.head, a.tail, cap, -c)
            handles.append((e, -1))
        else:
            e = res.add(a.tail, a.head, cap, c)
            handles.append((e, +1))
        b[a.tail] -= shift
        b[a.head] += shift
        base.append(shift)

    need = 0
    for v in range(n):
        if b[v] > 0:
            res.add(src, v, b[v], 0)
            need += b[v]
        elif b[v] < 0:
            res.add(v, snk, -b[v], 0)

    sent = _successive_shortest_paths(res, src, snk, need)
    if sent < need:
        raise InfeasibleFlow(f"only {sent} of {need} units can be routed")

    flow = []
    for (e, sign), shift in zip(handles, base):
        pushed = res.cap[e ^ 1]
        flow.append(shift + pushed if sign > 0 else shift - pushed)
    total = float(sum(f * a.cost for f, a in zip(flow, net.arcs)))
    return FlowResult(flow, total)


def _successive_shortest_paths(res: _Residual, s: int, t: int, need: int) -> int:
    n = len(res.adj)
    pot = [0] * n
    head, cap, cost, adj = res.head, res.cap, res.cost, res.adj
    inf = float("inf")
    sent = 0
    while sent < need:
        dist = [inf] * n
        prev = [-1] * n
        dist[s] = 0
        heap = [(0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            pu = pot[u]
            for e in adj[u]:
                if cap[e] > 0:
                    v = head[e]
                    nd = d + cost[e] + pu - pot[v]
                    if nd < dist[v]:
                        dist[v] = nd
                        prev[v] = e
                        heapq.heappush(heap, (nd, v))
        if dist[t] == inf:
            break
        for v in range(n):
            if dist[v] < inf:
                pot[v] += dist[v]
        push = need - sent
        v = t
        while v != s:
            e = prev[v]
            push = min(push, cap[e])
            v = head[e ^ 1]
        v = t
        while v != s:
            e = prev[v]
            cap[e] -= push
            cap[e ^ 1] += push
            v = head[e ^ 1]
        sent += push
    return sent


def integralize_assignment(inst, frac: np.ndarray, open_facilities,
                           lower_target: float, upper_target: float,
                           support_only: bool = True, tol: float = 1e-9) -> list[int]:
    """Round a fractional client assignment to an integral one.

    ``frac[i, j]`` is the fraction of client ``j`` served by facility ``i``
    (each client's column must sum to 1).  Every open facility's integral
    load is kept within ``[floor(lower_target), ceil(upper_target)]``.  With
    ``support_only`` the rounding only uses pairs with ``frac > tol``, so
    an already integral input is a fixed point and the connection cost can
    only go down.  Returns ``assign`` with ``assign[j]`` a facility index.
    """
    dist_fc = inst.fc
    opened = sorted(int(i) for i in open_facilities)
    lo = max(0, math.floor(lower_target + 1e-9))
    hi = math.ceil(upper_target - 1e-9)
    return _bounded_assignment(dist_fc, opened, {i: lo for i in opened},
                               {i: hi for i in opened},
                               None if not support_only else frac > tol)


def _bounded_assignment(dist_fc, opened, lo, hi, allowed=None) -> list[int]:
    """Min-cost assignment of unit clients to ``opened`` with per-facility bounds."""
    nf, nc = dist_fc.shape
    net = FlowNetwork(nc + len(opened) + 1)
    sink = nc + len(opened)
    arcs = []
    for j in range(nc):
        net.supply[j] = 1
        for k, i in enumerate(opened):
            if allowed is None or allowed[i, j]:
                arcs.append((net.add_arc(j, nc + k, 0, 1, float(dist_fc[i, j])), i, j))
    for k, i in enumerate(opened):
        net.add_arc(nc + k, sink, lo[i], hi[i], 0.0)
    net.supply[sink] = -nc
    res = min_cost_flow(net)
    assign = [-1] * nc
    for a, i, j in arcs:
        if res.flow[a]:
            assign[j] = i
    return assign


def bounded_assignment(dist_fc: np.ndarray, open_facilities, lower: int,
                       upper: int | None, per_facility_lower: dict | None = None) -> list[int]:
    """Cheapest assignment of every client to ``open_facilities`` with loads in [lower, upper]."""
    opened = sorted(int(i) for i in open_facilities)
    if per_facility_lower is not None:
        return _bounded_assignment(dist_fc, opened, per_facility_lower,
                                   {i: upper for i in opened})
    return _bounded_assignment(dist_fc, opened, {i: lower for i in opened},
                               {i: upper for i in opened})
