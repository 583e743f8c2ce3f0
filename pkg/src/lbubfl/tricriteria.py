"""Filtering and rounding of the LP optimum into an integrally opened solution.

The solution produced here may serve fewer than L clients at a facility
(down to a factor 1 - 1/ell) and more than U (up to 1 + threshold).  It is
the starting point for the lower-bound repair done in ``transform``,
``cfl`` and ``treefix``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lp as lp_mod
from .core import (Instance, InvariantViolation, ParameterError, PipelineAbort, Solution,
                   check_bounds, cost)
from .mcflow import InfeasibleFlow, bounded_assignment, integralize_assignment

DEFAULT_ELL = 2.01
DEFAULT_THRESHOLD = 0.5
_TOL = 1e-9


@dataclass(frozen=True)
class Ball:
    center: int
    radius: float
    members: tuple
    mass: float


@dataclass
class Cluster:
    center: int
    members: list
    demand: float
    phi: np.ndarray  # phi[j] = sum_{i in members} x*_ij
    kind: str  # "sparse" | "dense"


@dataclass
class DenseRounding:
    z: dict
    z_prime: dict
    z_hat: dict
    fractional: int | None


@dataclass
class TriCriteriaSolution:
    open: frozenset
    assign: tuple
    measured_alpha: float
    measured_beta: float
    cost: float
    ell: float
    threshold: float
    lp: lp_mod.FractionalSolution
    centers: list
    clusters: list
    x_bar: np.ndarray
    fractional_cost: float
    repaired: bool = False
    notes: list = field(default_factory=list)

    @property
    def solution(self) -> Solution:
        return Solution(self.open, self.assign)

    @property
    def beta_target(self) -> float:
        return 1.0 + self.threshold

    def loads(self) -> dict:
        return self.solution.loads()


def _check_ell(ell: float):
    if not 2.0 < ell <= 3.0:
        raise ParameterError(f"ell must lie in (2, 3], got {ell}")


def _scale(inst: Instance) -> float:
    # tolerances are relative to the diameter so rescaling the metric changes nothing
    m = float(inst.dist.max())
    return m if m > 0 else 1.0


def ball(inst: Instance, frac: lp_mod.FractionalSolution, j: int, ell: float) -> Ball:
    """Facilities within ell * (average connection cost of j) of client j."""
    radius = ell * frac.avg_connection_cost(j)
    d = inst.fc[:, j]
    members = tuple(int(i) for i in np.flatnonzero(d <= radius + _TOL * _scale(inst)))
    return Ball(j, radius, members, float(frac.y[list(members)].sum()) if members else 0.0)


def sparsify(inst: Instance, frac: lp_mod.FractionalSolution, ell: float) -> list[int]:
    """Pick cluster centres: smallest ball first, dropping clients close to a chosen centre.

    Client ``j`` is dropped once some chosen centre lies within
    ``2 * ell * Cbar_j`` of it.  Ties in radius go to the lower index.
    """
    _check_ell(ell)
    cbar = frac.avg_connection_costs()
    nf = inst.n_facilities
    tol = _TOL * _scale(inst)
    # radii equal up to solver noise count as ties, broken by index
    order = sorted(range(inst.n_clients), key=lambda j: (round(ell * cbar[j] / tol), j))
    alive = np.ones(inst.n_clients, dtype=bool)
    centers = []
    for jp in order:
        if not alive[jp]:
            continue
        centers.append(jp)
        alive[jp] = False
        dj = inst.dist[nf + jp, nf:]
        alive &= ~(dj <= 2 * ell * cbar + tol)
    return centers


def form_clusters(inst: Instance, centers, frac: lp_mod.FractionalSolution) -> list[Cluster]:
    """Attach every facility to its nearest centre (lower client index on ties)."""
    if not centers:
        raise ValueError("need at least one cluster centre")
    nf = inst.n_facilities
    cs = sorted(centers)
    d = inst.dist[:nf, [nf + c for c in cs]]
    owner = np.argmin(d, axis=1)  # first minimum = lowest client index
    clusters = []
    for k, jp in enumerate(cs):
        members = [int(i) for i in np.flatnonzero(owner == k)]
        phi = frac.x[members].sum(axis=0) if members else np.zeros(inst.n_clients)
        demand = float(phi.sum())
        kind = "sparse" if demand <= inst.upper + _TOL else "dense"
        clusters.append(Cluster(jp, members, demand, phi, kind))
    return clusters


def round_sparse(inst: Instance, cluster: Cluster, frac: lp_mod.FractionalSolution,
                 ell: float) -> int:
    """Facility that takes the whole sparse cluster: cheapest one inside the centre's ball."""
    b = set(ball(inst, frac, cluster.center, ell).members) & set(cluster.members)
    if not b:
        raise InvariantViolation(f"ball of centre {cluster.center} misses its own cluster")
    return min(b, key=lambda i: (inst.open_cost[i], i))


def round_dense(inst: Instance, cluster: Cluster, frac: lp_mod.FractionalSolution,
                ell: float, threshold: float | None = DEFAULT_THRESHOLD) -> DenseRounding:
    """Integral openings for a dense cluster.

    Starts from z_i = (load of i) / U, consolidates the openings onto the
    facilities with smallest f_i + U c(i, centre), then rounds the single
    leftover fraction up if it exceeds ``threshold`` (1 - 1/ell when None).
    """
    theta = 1 - 1 / ell if threshold is None else threshold
    U = inst.upper
    nf = inst.n_facilities
    z = {i: min(1.0, float(frac.x[i].sum()) / U) for i in cluster.members}
    support = [i for i in cluster.members if z[i] > 1e-12]
    key = {i: inst.open_cost[i] + U * inst.dist[i, nf + cluster.center] for i in support}
    support.sort(key=lambda i: (key[i], i))
    total = sum(z.values())
    whole = math.floor(total + 1e-9)
    rest = total - whole
    if rest < 1e-9:
        rest = 0.0
    z_prime = {i: 0.0 for i in cluster.members}
    fractional = None
    for k, i in enumerate(support):
        if k < whole:
            z_prime[i] = 1.0
        elif k == whole and rest > 0:
            z_prime[i] = rest
            fractional = i
            break
    z_hat = {i: float(round(v)) if i != fractional else 0.0 for i, v in z_prime.items()}
    if fractional is not None and rest > theta + 1e-9:
        z_hat[fractional] = 1.0
    opened = sum(z_hat.values())
    if opened < 1:
        raise InvariantViolation(f"dense cluster {cluster.center} rounded to no facility")
    if cluster.demand > (1 + theta) * U * opened * (1 + 1e-9) + 1e-7:
        raise InvariantViolation(
            f"dense cluster {cluster.center}: demand {cluster.demand:.6g} exceeds "
            f"{(1 + theta):.3g} U x {opened:g} openings")
    return DenseRounding(z, z_prime, z_hat, fractional)


def distribute_dense_demand(cluster: Cluster, z_hat: dict) -> dict:
    """Split the cluster demand equally over the opened facilities."""
    opened = sum(z_hat.values())
    if opened <= 0:
        raise ValueError("no facility opened in dense cluster")
    return {i: v * cluster.demand / opened for i, v in z_hat.items() if v > 0}


def build_tricriteria(inst: Instance, ell: float = DEFAULT_ELL,
                      threshold: float | None = DEFAULT_THRESHOLD,
                      lp_method: str = "highs",
                      frac: lp_mod.FractionalSolution | None = None) -> TriCriteriaSolution:
    """LP solve, filter, round each cluster, then integralise the assignment.

    Raises PipelineAbort when the measured lower-bound factor is not above 1/2.
    """
    _check_ell(ell)
    theta = 1 - 1 / ell if threshold is None else float(threshold)
    if not 0 < theta < 1:
        raise ParameterError(f"dense threshold must lie in (0, 1), got {threshold}")
    if frac is None:
        frac = lp_mod.solve_relaxation(inst, method=lp_method)
    centers = sparsify(inst, frac, ell)
    clusters = form_clusters(inst, centers, frac)

    nf, nc = inst.n_facilities, inst.n_clients
    x_bar = np.zeros((nf, nc))
    opened = set()
    for cl in clusters:
        if cl.demand <= 0:
            continue
        if cl.kind == "sparse":
            i = round_sparse(inst, cl, frac, ell)
            x_bar[i] += cl.phi
            opened.add(i)
        else:
            dr = round_dense(inst, cl, frac, ell, theta)
            for i, li in distribute_dense_demand(cl, dr.z_hat).items():
                x_bar[i] += li / cl.demand * cl.phi
                opened.add(i)

    # a client covered more than once in the LP is scaled back to unit mass
    mass = x_bar.sum(axis=0)
    if np.any(mass < 1 - 1e-6):
        raise InvariantViolation("fractional mass lost during rounding")
    x_bar = x_bar / mass
    frac_cost = float(inst.open_cost[sorted(opened)].sum() + (x_bar * inst.fc).sum())

    alpha_t = (1 - 1 / ell) * inst.lower
    beta_t = (1 + theta) * inst.upper
    notes = []
    repaired = False
    try:
        assign = integralize_assignment(inst, x_bar, opened, alpha_t, beta_t)
        ok = _alpha_of(assign, inst.lower) > 0.5
        if not ok:
            notes.append("outward rounding left a facility at or below L/2")
    except InfeasibleFlow:
        ok = False
        notes.append("outward rounding infeasible")
    if not ok:
        assign = _repair(inst, x_bar, opened, alpha_t, beta_t, notes)
        repaired = True

    sol = Solution.from_assignment(assign)
    rep = check_bounds(inst, sol)
    if rep.measured_alpha <= 0.5:
        raise PipelineAbort(
            f"measured lower-bound factor {rep.measured_alpha:.4f} is not above 1/2")
    return TriCriteriaSolution(
        open=sol.open, assign=sol.assign, measured_alpha=rep.measured_alpha,
        measured_beta=rep.measured_beta, cost=cost(inst, sol), ell=ell, threshold=theta,
        lp=frac, centers=centers, clusters=clusters, x_bar=x_bar,
        fractional_cost=frac_cost, repaired=repaired, notes=notes)


def _alpha_of(assign, lower) -> float:
    counts = np.bincount(np.asarray(assign))
    counts = counts[counts > 0]
    return float(counts.min()) / lower if len(counts) else 0.0


def _repair(inst, x_bar, opened, alpha_t, beta_t, notes) -> list[int]:
    """Re-assign with the lower target rounded up to the first integer above L/2.

    Facilities with the least fractional load are closed until the raised
    lower bounds fit within |C|.
    """
    lo = max(math.floor(alpha_t + 1e-9), inst.lower // 2 + 1)
    hi = math.ceil(beta_t - 1e-9)
    load = x_bar.sum(axis=1)
    keep = sorted(opened)
    n = inst.n_clients
    while len(keep) * lo > n:
        drop = min(keep, key=lambda i: (load[i], -i))
        keep.remove(drop)
        notes.append(f"closed facility {drop} (fractional load {load[drop]:.3f})")
    if not keep or len(keep) * hi < n:
        raise PipelineAbort("cannot place every client with loads in "
                            f"[{lo}, {hi}] on the rounded facilities")
    notes.append(f"re-assigned with loads in [{lo}, {hi}]")
    return bounded_assignment(inst.fc, keep, lo, hi)


def check_filtering(inst: Instance, tri: TriCriteriaSolution, tol: float = 1e-7) -> list[str]:
    """Separation of centres, the centre-distance bounds, and mass preservation."""
    errs = []
    ell = tri.ell
    frac = tri.lp
    cbar = frac.avg_connection_costs()
    nf = inst.n_facilities
    dcc = inst.dist[nf:, nf:]
    cs = tri.centers
    for a in range(len(cs)):
        for b in range(a + 1, len(cs)):
            j, k = cs[a], cs[b]
            if not dcc[j, k] > 2 * ell * max(cbar[j], cbar[k]) - tol:
                errs.append(f"separation fails for centres {j},{k}")
    for cl in tri.clusters:
        jp = cl.center
        for i in cl.members:
            dij = inst.fc[i]
            lhs1 = inst.fc[i, jp]
            bad1 = lhs1 > dij + 2 * ell * cbar + tol
            bad2 = dcc[:, jp] > 2 * dij + 2 * ell * cbar + tol
            if bad1.any():
                errs.append(f"facility {i} is too far from its centre {jp} relative to some client")
            if bad2.any():
                errs.append(f"centre {jp} is too far from a client of facility {i}")
        near = dcc[:, jp] <= ell * cbar[jp]
        if np.any(near & (cbar[jp] > 2 * cbar + tol)):
            errs.append(f"centre {jp} has a neighbour with a much smaller radius")
    total_phi = sum(cl.phi for cl in tri.clusters)
    if np.any(total_phi < 1 - tol):
        errs.append("client mass not fully reassigned")
    for cl in tri.clusters:
        if cl.kind == "sparse":
            b = ball(inst, frac, cl.center, ell)
            if b.mass < 1 - 1 / ell - tol:
                errs.append(f"ball of {cl.center} has mass {b.mass}")
    return errs
