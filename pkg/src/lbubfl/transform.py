"""Instance chain from the tri-criteria solution to a capacitated instance.

``to_i1`` moves every client onto the facility serving it, ``to_i2`` keeps
only the facilities that solution opened (free, no upper bound), and
``to_icap`` turns shortfalls below L into demand and surpluses into free
capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ColocatedClients, Instance, ParameterError, SCHEMA_VERSION, Solution


@dataclass(frozen=True)
class I1Instance:
    base: Instance
    location: tuple  # location[j] = facility the client now sits on
    counts: np.ndarray  # n_i for every facility of base
    members: dict  # facility -> sorted client indices sitting there
    open_cost1: np.ndarray

    @property
    def facilities_t(self) -> list[int]:
        return sorted(i for i, n in enumerate(self.counts) if n > 0)

    @property
    def clients_at(self) -> list[ColocatedClients]:
        return [ColocatedClients(i, int(self.counts[i])) for i in self.facilities_t]

    def as_instance(self) -> Instance:
        """The moved instance as a plain Instance (clients share facility rows)."""
        b = self.base
        nf = b.n_facilities
        rows = list(range(nf)) + list(self.location)
        coords = None if b.coords is None else b.coords[rows]
        return Instance(b.facility_ids, b.client_ids, self.open_cost1,
                        b.dist[np.ix_(rows, rows)], b.lower, b.upper, coords=coords)


@dataclass(frozen=True)
class I2Instance:
    base: Instance
    facilities: tuple  # F^t, sorted
    counts: dict  # facility -> n_i
    members: dict
    lower: int

    @property
    def n_clients(self) -> int:
        return int(sum(self.counts.values()))

    def dist(self) -> np.ndarray:
        f = list(self.facilities)
        return self.base.dist[np.ix_(f, f)]

    def as_instance(self) -> Instance:
        """Equivalent Instance with zero costs and U = |C| (i.e. no upper bound)."""
        b = self.base
        nf_b = b.n_facilities
        f = list(self.facilities)
        loc = [i for i in f for _ in range(self.counts[i])]
        cids = [b.client_ids[j] for i in f for j in self.members[i]]
        rows = f + loc
        coords = None if b.coords is None else b.coords[rows]
        return Instance(tuple(b.facility_ids[i] for i in f), tuple(cids), np.zeros(len(f)),
                        b.dist[np.ix_(rows, rows)], self.lower,
                        max(self.lower, self.n_clients), coords=coords)


@dataclass(frozen=True)
class CflSite:
    id: str
    origin: int  # facility index in the base instance
    role: str  # "small" | "primary" | "free"
    demand: int
    capacity: int
    open_cost: float
    nn_dist: float
    clients: tuple  # client indices placed at this site


@dataclass(frozen=True)
class CflInstance:
    sites: tuple
    dist: np.ndarray  # site x site
    delta: float
    lower: int

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def demand_sites(self) -> list[int]:
        return [k for k, s in enumerate(self.sites) if s.demand > 0]

    def to_dict(self) -> dict:
        return {
            "version": SCHEMA_VERSION, "stage": "Icap", "L": self.lower, "delta": self.delta,
            "sites": [{"id": s.id, "origin": s.origin, "role": s.role, "demand": s.demand,
                       "capacity": s.capacity, "cost": s.open_cost, "l": s.nn_dist}
                      for s in self.sites],
            "matrix": [float(v) for v in self.dist.ravel()],
        }


@dataclass
class CflSolution:
    open: frozenset
    ship: dict  # (demand site, supply site) -> amount

    def served_by(self, k: int) -> int:
        return sum(a for (_, s), a in self.ship.items() if s == k)

    def received(self, k: int) -> int:
        return sum(a for (d, _), a in self.ship.items() if d == k)


def to_i1(inst: Instance, tri) -> I1Instance:
    """Move clients onto their facility in ``tri`` (anything with ``assign`` and ``open``)."""
    sol = tri.solution if hasattr(tri, "solution") else tri
    if not isinstance(sol, Solution):
        sol = Solution(tri.open, tri.assign)
    if len(sol.assign) != inst.n_clients:
        raise ValueError("tri-criteria solution must cover every client")
    counts = np.zeros(inst.n_facilities, dtype=int)
    members: dict = {}
    for j, i in enumerate(sol.assign):
        counts[i] += 1
        members.setdefault(i, []).append(j)
    f1 = np.array(inst.open_cost, dtype=float)
    f1[counts > 0] = 0.0
    return I1Instance(inst, tuple(sol.assign), counts,
                      {i: tuple(sorted(v)) for i, v in members.items()}, f1)


def to_i2(i1: I1Instance) -> I2Instance:
    ft = tuple(i1.facilities_t)
    return I2Instance(i1.base, ft, {i: int(i1.counts[i]) for i in ft},
                      {i: i1.members[i] for i in ft}, i1.base.lower)


def nearest_other(dist: np.ndarray, facilities) -> dict:
    """For each facility, (nearest other facility, distance); lower index breaks ties."""
    f = list(facilities)
    out = {}
    for a, i in enumerate(f):
        best = None
        for b, k in enumerate(f):
            if k == i:
                continue
            d = dist[i, k]
            if best is None or d < best[1] or (d == best[1] and k < best[0]):
                best = (k, d)
        out[i] = best
    return out


def to_icap(i2: I2Instance, delta: float, lower: int | None = None) -> CflInstance:
    """Capacitated instance: small facilities get demand L - n_i, big ones split in two."""
    if delta <= 0:
        raise ParameterError("delta must be positive")
    L = i2.lower if lower is None else lower
    if len(i2.facilities) < 2:
        raise ParameterError("need at least two opened facilities to define l(i)")
    nn = nearest_other(i2.base.dist, i2.facilities)
    sites = []
    origin_rows = []
    for i in i2.facilities:
        n = i2.counts[i]
        if n <= 0:
            raise ParameterError(f"facility {i} has no clients")
        li = float(nn[i][1])
        mem = tuple(sorted(i2.members[i]))
        if n <= L:
            sites.append(CflSite(f"{i}", i, "small", L - n, L, delta * n * li, li, mem))
            origin_rows.append(i)
        else:
            sites.append(CflSite(f"{i}a", i, "primary", 0, L, delta * L * li, li, mem[:L]))
            sites.append(CflSite(f"{i}b", i, "free", 0, n - L, 0.0, li, mem[L:]))
            origin_rows += [i, i]
    d = i2.base.dist[np.ix_(origin_rows, origin_rows)]
    return CflInstance(tuple(sites), d, float(delta), L)


def delta_default(measured_alpha: float) -> float:
    """Opening-cost scale 3(2a - 1) / (2a(a + 1)) for lower-bound factor a in (1/2, 1]."""
    a = float(measured_alpha)
    if not 0.5 < a <= 1.0:
        raise ParameterError(f"alpha must lie in (1/2, 1], got {a}")
    return 3 * (2 * a - 1) / (2 * a * (a + 1))
