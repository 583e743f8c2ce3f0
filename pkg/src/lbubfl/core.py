"""Instance and solution data model shared by every stage.

Facilities and clients are addressed by position (0-based index) everywhere
inside the package; the string ids only matter at the JSON boundary.  All
distances live in one square matrix over ``facilities + clients`` so that
facility-facility distances are available to the tree machinery.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1
METRIC_RTOL = 1e-9


class LbubflError(Exception):
    """Base class for all errors raised by this package."""


class InfeasibleError(LbubflError):
    """No assignment respecting the requested bounds exists."""


class MetricError(LbubflError):
    """Distances are not a metric."""


class ParameterError(LbubflError):
    """A tuning parameter is outside its admissible range."""


class PipelineAbort(LbubflError):
    """The pipeline cannot continue (e.g. measured alpha <= 1/2)."""


class InvariantViolation(LbubflError):
    """An internal invariant that the algorithm guarantees was broken."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Instance:
    """Uniformly bounded facility location instance.

    ``dist`` is the full metric over facilities followed by clients, so
    ``dist[i, n_facilities + j]`` is the connection cost c(i, j).
    """

    facility_ids: tuple[str, ...]
    client_ids: tuple[str, ...]
    open_cost: np.ndarray
    dist: np.ndarray
    lower: int
    upper: int
    coords: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        nf, nc = len(self.facility_ids), len(self.client_ids)
        object.__setattr__(self, "facility_ids", tuple(str(f) for f in self.facility_ids))
        object.__setattr__(self, "client_ids", tuple(str(c) for c in self.client_ids))
        object.__setattr__(self, "open_cost", _frozen(self.open_cost))
        object.__setattr__(self, "dist", _frozen(self.dist))
        if self.coords is not None:
            object.__setattr__(self, "coords", _frozen(self.coords))
        if self.open_cost.shape != (nf,):
            raise ValueError(f"open_cost must have shape ({nf},), got {self.open_cost.shape}")
        if self.dist.shape != (nf + nc, nf + nc):
            raise ValueError(f"dist must be ({nf + nc}, {nf + nc}), got {self.dist.shape}")
        if np.any(self.open_cost < 0):
            raise ValueError("opening costs must be nonnegative")
        if np.any(self.dist < 0) or not np.all(np.isfinite(self.dist)):
            raise ValueError("distances must be finite and nonnegative")
        if int(self.lower) != self.lower or int(self.upper) != self.upper:
            raise ParameterError("bounds must be integers")
        if self.lower < 1 or self.upper < 1:
            raise ParameterError("bounds must be positive")
        if self.lower > self.upper:
            raise ParameterError(f"L={self.lower} exceeds U={self.upper}")
        if len(set(self.facility_ids)) != nf or len(set(self.client_ids)) != nc:
            raise ValueError("ids must be unique")

    @property
    def n_facilities(self) -> int:
        return len(self.facility_ids)

    @property
    def n_clients(self) -> int:
        return len(self.client_ids)

    @property
    def fc(self) -> np.ndarray:
        """Facility x client connection costs."""
        nf = self.n_facilities
        return self.dist[:nf, nf:]

    @property
    def ff(self) -> np.ndarray:
        nf = self.n_facilities
        return self.dist[:nf, :nf]

    def client_point(self, j: int) -> int:
        """Row of client ``j`` in ``dist``."""
        return self.n_facilities + j

    def feasible_counts(self) -> list[int]:
        return feasible_counts(self.n_clients, self.n_facilities, self.lower, self.upper)

    def is_feasible(self) -> bool:
        return bool(self.feasible_counts())

    @classmethod
    def from_coords(cls, facility_xy, client_xy, open_cost, lower, upper,
                    facility_ids=None, client_ids=None) -> "Instance":
        """Build an instance with Euclidean distances from 2D points."""
        fxy = np.asarray(facility_xy, dtype=float).reshape(-1, 2)
        cxy = np.asarray(client_xy, dtype=float).reshape(-1, 2)
        pts = np.vstack([fxy, cxy])
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        if facility_ids is None:
            facility_ids = [f"f{i}" for i in range(len(fxy))]
        if client_ids is None:
            client_ids = [f"c{j}" for j in range(len(cxy))]
        return cls(tuple(facility_ids), tuple(client_ids), np.asarray(open_cost, float),
                   dist, int(lower), int(upper), coords=pts)

    @classmethod
    def on_line(cls, facility_x, client_x, open_cost, lower, upper) -> "Instance":
        fx = np.column_stack([np.asarray(facility_x, float), np.zeros(len(facility_x))])
        cx = np.column_stack([np.asarray(client_x, float), np.zeros(len(client_x))])
        return cls.from_coords(fx, cx, open_cost, lower, upper)

    def scaled(self, factor: float) -> "Instance":
        """Copy with all distances and opening costs multiplied by ``factor``."""
        return Instance(self.facility_ids, self.client_ids, self.open_cost * factor,
                        self.dist * factor, self.lower, self.upper,
                        coords=None if self.coords is None else self.coords * factor)

    def permute_clients(self, perm: Sequence[int]) -> "Instance":
        """Instance whose client ``k`` is the original client ``perm[k]``."""
        nf = self.n_facilities
        order = list(range(nf)) + [nf + p for p in perm]
        return Instance(self.facility_ids, tuple(self.client_ids[p] for p in perm),
                        self.open_cost, self.dist[np.ix_(order, order)], self.lower,
                        self.upper,
                        coords=None if self.coords is None else self.coords[order])


def feasible_counts(n_clients: int, n_facilities: int, lower: int, upper: int) -> list[int]:
    """All k <= |F| with k*L <= |C| <= k*U.  Empty means no exact solution."""
    return [k for k in range(1, n_facilities + 1) if k * lower <= n_clients <= k * upper]


@dataclass(frozen=True)
class Solution:
    """Open facility set and client assignment (``assign[j]`` = facility index)."""

    open: frozenset
    assign: tuple

    def __post_init__(self):
        object.__setattr__(self, "open", frozenset(int(i) for i in self.open))
        object.__setattr__(self, "assign", tuple(int(i) for i in self.assign))

    def loads(self) -> dict[int, int]:
        out = {i: 0 for i in self.open}
        for i in self.assign:
            out[i] = out.get(i, 0) + 1
        return out

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {i: [] for i in self.open}
        for j, i in enumerate(self.assign):
            out.setdefault(i, []).append(j)
        return out

    @classmethod
    def from_assignment(cls, assign: Iterable[int]) -> "Solution":
        assign = tuple(int(i) for i in assign)
        return cls(frozenset(assign), assign)


@dataclass(frozen=True)
class ColocatedClients:
    location: int
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be nonnegative")


def validate_metric(inst: Instance, rtol: float = METRIC_RTOL) -> list[tuple]:
    """List metric violations; empty iff ``inst.dist`` is a metric.

    Entries are ``("diagonal", a)``, ``("symmetry", a, b)`` with a < b, and
    ``("triangle", a, b, c)`` meaning d(a, c) > d(a, b) + d(b, c), reported
    once per unordered pair {a, c} (a < c).
    """
    d = inst.dist
    n = d.shape[0]
    out: list[tuple] = []
    for a in np.flatnonzero(np.abs(np.diag(d)) > 0):
        out.append(("diagonal", int(a)))
    asym = np.abs(d - d.T) > rtol * np.maximum(np.abs(d), np.abs(d.T)) + 1e-15
    for a, b in zip(*np.nonzero(np.triu(asym, 1))):
        out.append(("symmetry", int(a), int(b)))
    for b in range(n):
        via = d[:, b][:, None] + d[b, :][None, :]
        bad = d > via * (1 + rtol) + 1e-12
        bad[b, :] = False
        bad[:, b] = False
        bad = np.triu(bad, 1)
        for a, c in zip(*np.nonzero(bad)):
            out.append(("triangle", int(a), b, int(c)))
    return out


def cost(inst: Instance, sol: Solution) -> float:
    """Opening cost of ``sol.open`` plus every client's connection cost."""
    if len(sol.assign) != inst.n_clients:
        raise ValueError(f"assignment covers {len(sol.assign)} of {inst.n_clients} clients")
    for i in sol.open:
        if not 0 <= i < inst.n_facilities:
            raise ValueError(f"unknown facility {i}")
    fc = inst.fc
    conn = 0.0
    for j, i in enumerate(sol.assign):
        if i not in sol.open:
            raise ValueError(f"client {j} assigned to facility {i} which is not open")
        conn += fc[i, j]
    return float(sum(inst.open_cost[i] for i in sol.open) + conn)


def connection_cost(inst: Instance, sol: Solution) -> float:
    fc = inst.fc
    return float(sum(fc[i, j] for j, i in enumerate(sol.assign)))


@dataclass(frozen=True)
class BoundReport:
    passed: bool
    loads: dict
    lower_limit: int
    upper_limit: float
    min_load: int
    max_load: int
    measured_alpha: float
    measured_beta: float
    lower_violations: tuple = ()
    upper_violations: tuple = ()


def check_bounds(inst: Instance, sol: Solution, alpha: float = 1.0, beta: float = 1.0,
                 slack: int = 0) -> BoundReport:
    """Check every open facility load lies in [ceil(alpha L), floor(beta U)] +- slack.

    Open facilities that serve nobody count as load 0 (and so fail any
    positive lower bound).
    """
    loads = sol.loads()
    lo = math.ceil(alpha * inst.lower - 1e-9) - slack
    hi = math.floor(beta * inst.upper + 1e-9) + slack
    low_bad = tuple(sorted(i for i, n in loads.items() if n < lo))
    up_bad = tuple(sorted(i for i, n in loads.items() if n > hi))
    values = list(loads.values()) or [0]
    return BoundReport(
        passed=not low_bad and not up_bad,
        loads=loads,
        lower_limit=lo,
        upper_limit=hi,
        min_load=min(values),
        max_load=max(values),
        measured_alpha=min(values) / inst.lower,
        measured_beta=max(values) / inst.upper,
        lower_violations=low_bad,
        upper_violations=up_bad,
    )


# --- JSON boundary ---------------------------------------------------------

def instance_to_dict(inst: Instance, stage: str | None = None) -> dict:
    nf = inst.n_facilities
    out: dict = {"version": SCHEMA_VERSION, "L": inst.lower, "U": inst.upper}
    if stage is not None:
        out["stage"] = stage
    facilities = []
    for i, fid in enumerate(inst.facility_ids):
        rec = {"id": fid, "cost": float(inst.open_cost[i])}
        if inst.coords is not None:
            rec["x"], rec["y"] = (float(v) for v in inst.coords[i])
        facilities.append(rec)
    clients = []
    for j, cid in enumerate(inst.client_ids):
        rec = {"id": cid}
        if inst.coords is not None:
            rec["x"], rec["y"] = (float(v) for v in inst.coords[nf + j])
        clients.append(rec)
    out["facilities"] = facilities
    out["clients"] = clients
    if inst.coords is None:
        out["matrix"] = [float(v) for v in inst.dist.ravel()]
    return out


def instance_from_dict(data: dict, check_metric: bool = True) -> Instance:
    """Parse the JSON instance schema (coordinates or an explicit matrix)."""
    try:
        lower, upper = int(data["L"]), int(data["U"])
        facilities, clients = data["facilities"], data["clients"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed instance: {exc}") from exc
    fids = [str(f["id"]) for f in facilities]
    cids = [str(c["id"]) for c in clients]
    costs = [float(f.get("cost", 0.0)) for f in facilities]
    if data.get("matrix") is not None:
        n = len(fids) + len(cids)
        m = np.asarray(data["matrix"], dtype=float)
        if m.size != n * n:
            raise ValueError(f"matrix must have {n * n} entries, got {m.size}")
        inst = Instance(tuple(fids), tuple(cids), np.asarray(costs), m.reshape(n, n),
                        lower, upper)
        if check_metric:
            bad = validate_metric(inst)
            if bad:
                raise MetricError(f"{len(bad)} metric violations, first: {bad[0]}")
        return inst
    try:
        fxy = [(float(f["x"]), float(f["y"])) for f in facilities]
        cxy = [(float(c["x"]), float(c["y"])) for c in clients]
    except KeyError as exc:
        raise ValueError("instance needs either coordinates or a matrix") from exc
    return Instance.from_coords(fxy, cxy, costs, lower, upper, fids, cids)


def load_instance(path, check_metric: bool = True) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh), check_metric=check_metric)


def save_instance(inst: Instance, path, stage: str | None = None) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst, stage), indent=1) + "\n")


def solution_to_dict(inst: Instance, sol: Solution) -> dict:
    rep = check_bounds(inst, sol)
    return {
        "open": [inst.facility_ids[i] for i in sorted(sol.open)],
        "assign": {inst.client_ids[j]: inst.facility_ids[i] for j, i in enumerate(sol.assign)},
        "cost": cost(inst, sol),
        "min_load": rep.min_load,
        "max_load": rep.max_load,
    }


def solution_from_dict(inst: Instance, data: dict) -> Solution:
    fidx = {f: i for i, f in enumerate(inst.facility_ids)}
    try:
        assign = [fidx[data["assign"][c]] for c in inst.client_ids]
        opened = frozenset(fidx[f] for f in data["open"])
    except KeyError as exc:
        raise ValueError(f"unknown id in solution: {exc}") from exc
    return Solution(opened, tuple(assign))
