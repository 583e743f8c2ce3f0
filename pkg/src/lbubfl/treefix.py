"""Turning the capacitated solution into one that meets every lower bound.

Three kinds of client moves happen here, in order:

1. demand shipped in the capacitated solution becomes real clients moving
   to the small facility that asked for them;
2. facilities still short of L hang off their nearest neighbour in a
   forest, which is processed bottom-up (children that reach L open and
   are cut off, the rest cascade towards the parent);
3. whatever collects at a root pair opens one or both of the pair, or is
   sent to the nearest facility that already has L clients.

Client ids travel with every move so the final solution can be priced in
the original metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Instance, InvariantViolation, Solution
from .transform import CflInstance, CflSolution, I1Instance, nearest_other


@dataclass
class Reassignment:
    rho1: dict  # (source facility, target facility) -> number of clients moved
    loads: dict  # facility -> clients held after the moves
    holdings: dict  # facility -> client ids held
    counts: dict  # facility -> n_i before the moves

    @property
    def moved(self) -> int:
        return sum(v for (a, b), v in self.rho1.items() if a != b)

    def outgoing(self, i) -> int:
        return sum(v for (a, b), v in self.rho1.items() if a == i and b != i)

    def incoming(self, i) -> int:
        return sum(v for (a, b), v in self.rho1.items() if b == i and a != i)


def type1_reassign(i1: I1Instance, icap: CflInstance, ascap: CflSolution) -> Reassignment:
    """Realise every remote shipment of the capacitated solution as client moves.

    Demand of small site d served by site s moves that many clients from
    s's pool to facility ``origin(d)``; the lowest client ids go first.
    """
    pools = {k: list(s.clients) for k, s in enumerate(icap.sites)}
    counts = {i: int(i1.counts[i]) for i in i1.facilities_t}
    holdings = {i: [] for i in counts}
    for k, s in enumerate(icap.sites):
        holdings[s.origin].extend(s.clients)
    rho1: dict = {}
    for (d, s), amt in sorted(ascap.ship.items()):
        if d == s or amt <= 0:
            continue
        if icap.sites[d].role != "small":
            raise InvariantViolation(f"site {icap.sites[d].id} has demand but is not small")
        src, dst = icap.sites[s].origin, icap.sites[d].origin
        if src == dst:
            continue
        if len(pools[s]) < amt:
            raise InvariantViolation(f"site {icap.sites[s].id} ships more clients than it holds")
        moved, pools[s] = pools[s][:amt], pools[s][amt:]
        for j in moved:
            holdings[src].remove(j)
        holdings[dst].extend(moved)
        rho1[(src, dst)] = rho1.get((src, dst), 0) + amt
    for i in holdings:
        holdings[i].sort()
    reass = Reassignment(rho1, {i: len(h) for i, h in holdings.items()}, holdings, counts)
    for i, n in counts.items():
        kept = n - reass.outgoing(i)
        if kept:
            rho1[(i, i)] = kept
    return reass


def type1_bound_errors(reass: Reassignment, lower: int, beta_u: float) -> list[str]:
    """Per-facility send and collect bounds after the type-1 moves.

    ``beta_u`` is the largest load allowed in the rounded solution.
    """
    errs = []
    for i, n in reass.counts.items():
        if reass.outgoing(i) > n:
            errs.append(f"facility {i} sends {reass.outgoing(i)} > n_i = {n}")
        got = n + reass.incoming(i)
        cap = max(lower, n)
        if got > cap:
            errs.append(f"facility {i} collects {got} > max(L, n_i) = {cap}")
        if cap > beta_u + 1e-9:
            errs.append(f"max(L, n_{i}) = {cap} exceeds beta U = {beta_u}")
    return errs


def partition_P(reass: Reassignment, lower: int) -> tuple[list, list]:
    """Facilities already holding at least L clients, and the rest."""
    P = sorted(i for i, n in reass.loads.items() if n >= lower)
    Pbar = sorted(i for i, n in reass.loads.items() if n < lower)
    return P, Pbar


def closed_site_errors(icap: CflInstance, ascap: CflSolution, P) -> list[str]:
    """Small sites closed (and big sites whose first half is closed) must land in P."""
    Pset = set(P)
    errs = []
    for k, s in enumerate(icap.sites):
        if s.role in ("small", "primary") and k not in ascap.open and s.origin not in Pset:
            errs.append(f"{s.role} site {s.id} closed in the capacitated solution "
                        "but its facility is short of L")
    return errs


@dataclass
class FacilityForest:
    """Nearest-neighbour forest over the opened facilities of the rounded solution."""

    lower: int
    dist: np.ndarray
    eta: dict  # node in Pbar -> nearest other facility
    children: dict  # facility -> attached children
    roots: list  # ("P", i) or ("pair", r1, r2), one per component
    depth: dict
    holdings: dict
    P: list
    opened: set = field(default_factory=set)
    events: list = field(default_factory=list)
    max_nonroot: int = 0
    violations: dict = field(default_factory=dict)  # check name -> messages

    def flag(self, check: str, msg: str):
        self.violations.setdefault(check, []).append(msg)

    def count(self, i) -> int:
        return len(self.holdings[i])

    def node_children(self, x) -> list:
        if isinstance(x, tuple):
            r1, r2 = x
            return [c for c in self.children[r1] + self.children[r2] if c not in x]
        return list(self.children[x])

    def root_of_pair(self) -> dict:
        return {r: ("pair", *sorted((r, self.eta[r]))) for r in self.eta
                if self.eta.get(self.eta[r]) == r}

    def detach(self, y):
        p = self.eta[y]
        if y in self.children[p]:
            self.children[p].remove(y)

    def move(self, src, dst, reason):
        moved = self.holdings[src]
        self.holdings[src] = []
        self.holdings[dst] = sorted(self.holdings[dst] + moved)
        self.events.append({"kind": reason, "from": src, "to": dst, "clients": len(moved)})
        return len(moved)

    def to_dict(self) -> dict:
        return {
            "eta": {str(k): v for k, v in self.eta.items()},
            "roots": [list(r) for r in self.roots],
            "counts": {str(k): len(v) for k, v in self.holdings.items()},
            "opened": sorted(self.opened),
            "events": self.events,
        }


def build_forest(facilities, P, Pbar, dist: np.ndarray, holdings: dict,
                 lower: int) -> FacilityForest:
    """Edges i -> eta(i) for every facility short of L; eta is the nearest other facility."""
    ft = sorted(facilities)
    nn = nearest_other(dist, ft) if len(ft) >= 2 else {}
    Pset = set(P)
    eta = {i: nn[i][0] for i in Pbar}
    children = {i: [] for i in ft}
    pair_of = {}
    for i in Pbar:
        p = eta[i]
        if p in eta and eta[p] == i:
            pair_of[i] = p
            continue
        children[p].append(i)
    roots = [("P", i) for i in sorted(Pset)]
    seen = set()
    for i in sorted(pair_of):
        if i not in seen:
            a, b = sorted((i, pair_of[i]))
            roots.append(("pair", a, b))
            seen |= {a, b}
    depth = {}
    for r in roots:
        stack = [(n, 0) for n in r[1:]]
        while stack:
            v, d = stack.pop()
            depth[v] = d
            stack.extend((c, d + 1) for c in children[v])
    if len(depth) != len(ft):
        raise InvariantViolation("facility forest has a component without a root")
    forest = FacilityForest(lower, dist, eta, children, roots, depth,
                            {i: list(holdings[i]) for i in ft}, sorted(Pset))
    for msg in forest_structure_errors(forest):
        forest.flag("forest_structure", msg)
    return forest


def forest_structure_errors(forest: FacilityForest) -> list[str]:
    errs = []
    d = forest.dist
    Pset = set(forest.P)
    for y, p in forest.eta.items():
        if y in Pset:
            errs.append(f"facility {y} holds L clients but has a parent")
        q = forest.eta.get(p)
        if q is not None and d[p, q] > d[y, p] + 1e-12:
            errs.append(f"edge cost grows from {y}->{p} to {p}->{q}")
    for r in forest.roots:
        if r[0] == "pair" and not (forest.eta[r[1]] == r[2] and forest.eta[r[2]] == r[1]):
            errs.append(f"root pair {r[1:]} is not mutual")
    return errs


def process_node(forest: FacilityForest, x, lower: int | None = None) -> list:
    """Process one node after all of its descendants; returns facilities opened here."""
    L = forest.lower if lower is None else lower
    opened = []
    kids = forest.node_children(x)
    for y in kids:
        if forest.count(y) >= L:
            opened.append(y)
            forest.detach(y)
    rest = [y for y in kids if y not in opened]
    if not rest:
        forest.opened.update(opened)
        return opened
    d = forest.dist
    rest.sort(key=lambda y: (-d[y, forest.eta[y]], y))
    for a, b in zip(rest, rest[1:]):
        if forest.count(a) >= L:
            opened.append(a)
        else:
            lim = 3 * d[a, forest.eta[a]]
            if d[a, b] > lim * (1 + 1e-9) + 1e-12:
                forest.flag("sibling_3l", f"sibling hop {a}->{b} longer than 3 l({a})")
            sent = forest.move(a, b, "sibling")
            if sent > L:
                forest.flag("edge_l", f"{sent} clients sent on edge {a}->{b}")
            _note_nonroot(forest, b, L)
        forest.detach(a)
    last = rest[-1]
    if forest.count(last) >= L:
        opened.append(last)
    else:
        p = forest.eta[last]
        sent = forest.move(last, p, "parent")
        if sent > L:
            forest.flag("edge_l", f"{sent} clients sent on edge {last}->{p}")
        if p in forest.eta and forest.eta.get(forest.eta[p]) != p:
            _note_nonroot(forest, p, L)
    forest.detach(last)
    forest.opened.update(opened)
    return opened


def _note_nonroot(forest, v, L):
    n = forest.count(v)
    forest.max_nonroot = max(forest.max_nonroot, n)
    if n > 2 * L:
        forest.flag("nonroot_2l", f"non-root node {v} holds {n} > 2L clients")


def resolve_root(forest: FacilityForest, root, lower: int | None = None, P=None) -> list:
    """Open facilities at a component root once its subtree is processed."""
    L = forest.lower if lower is None else lower
    P = forest.P if P is None else P
    if root[0] == "P":
        forest.opened.add(root[1])
        return [root[1]]
    _, r1, r2 = root
    T = forest.count(r1) + forest.count(r2)
    big, small = sorted((r1, r2), key=lambda r: (-forest.count(r), r))
    if T > 3 * L:
        forest.flag("root_3l", f"root pair {r1},{r2} collected {T} > 3L clients")
    if L <= T <= 2 * L:
        forest.move(small, big, "root-merge")
        forest.opened.add(big)
        return [big]
    if T > 2 * L:
        surplus = forest.count(big) - (T + 1) // 2
        if surplus > 0:
            moved = forest.holdings[big][:surplus]
            forest.holdings[big] = forest.holdings[big][surplus:]
            forest.holdings[small] = sorted(forest.holdings[small] + moved)
            forest.events.append({"kind": "root-split", "from": big, "to": small,
                                  "clients": surplus})
        forest.opened.update((r1, r2))
        return [r1, r2]
    if not P:
        raise InvariantViolation(
            f"root pair {r1},{r2} has {T} < L clients and no facility holds L clients")
    d = forest.dist
    target = min(P, key=lambda i: (min(d[i, r1], d[i, r2]), i))
    forest.move(r1, target, "root-ship")
    forest.move(r2, target, "root-ship")
    forest.opened.add(target)
    return [target]


def run_forest(forest: FacilityForest) -> FacilityForest:
    """Process every non-root node deepest-first (ascending id per level), then each root."""
    pair_members = {m for r in forest.roots if r[0] == "pair" for m in r[1:]}
    nodes = [v for v in forest.depth if v not in pair_members]
    nodes.sort(key=lambda v: (-forest.depth[v], v))
    for v in nodes:
        if forest.depth[v] == 0:
            continue
        process_node(forest, v)
        if forest.count(v) > 2 * forest.lower:
            forest.flag("nonroot_2l", f"node {v} holds {forest.count(v)} > 2L after processing")
        forest.max_nonroot = max(forest.max_nonroot, forest.count(v))
    for r in forest.roots:
        x = r[1] if r[0] == "P" else (r[1], r[2])
        process_node(forest, x)
    for r in forest.roots:
        if r[0] == "pair":
            resolve_root(forest, r)
    for r in forest.roots:
        if r[0] == "P":
            resolve_root(forest, r)
    return forest


def assemble_final(inst: Instance, i1: I1Instance, forest: FacilityForest) -> Solution:
    """Final assignment over the original clients; every open facility has at least L."""
    assign = [-1] * inst.n_clients
    for i in forest.opened:
        for j in forest.holdings[i]:
            assign[j] = i
    stray = [j for j, i in enumerate(assign) if i < 0]
    if stray:
        raise InvariantViolation(f"{len(stray)} clients left unassigned, e.g. {stray[:5]}")
    sol = Solution(frozenset(i for i in forest.opened if forest.holdings[i]), tuple(assign))
    short = {i: n for i, n in sol.loads().items() if n < inst.lower}
    if short:
        raise InvariantViolation(f"lower bound violated at {short}")
    return sol
