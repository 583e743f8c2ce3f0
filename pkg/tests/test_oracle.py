import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import Bounds, LinearConstraint, milp

from lbubfl.core import InfeasibleError, Instance, ParameterError, cost
from lbubfl.generate import random_instance, random_parameters
from lbubfl.oracle import exact_cfl, exact_lbfl, exact_lbubfl, exact_lbubfl_cost
from lbubfl.transform import CflInstance, CflSite, I2Instance


def brute_lbubfl(inst, upper=None):
    """Try every assignment of clients to facilities."""
    U = inst.upper if upper is None else upper
    best = None
    for assign in itertools.product(range(inst.n_facilities), repeat=inst.n_clients):
        loads = np.bincount(assign, minlength=inst.n_facilities)
        used = loads > 0
        if np.any(loads[used] < inst.lower) or np.any(loads[used] > U):
            continue
        c = inst.open_cost[used].sum() + sum(inst.fc[i, j] for j, i in enumerate(assign))
        best = c if best is None else min(best, c)
    return best


def milp_cfl(icap):
    n = icap.n_sites
    dem = [s.demand for s in icap.sites]
    cap = [s.capacity for s in icap.sites]
    nv = n + n * n  # y_s, then x[k, s]
    c = np.concatenate([[s.open_cost for s in icap.sites], icap.dist.ravel()])
    rows, lo, hi = [], [], []
    for k in range(n):
        r = np.zeros(nv)
        r[n + k * n: n + (k + 1) * n] = 1
        rows.append(r); lo.append(dem[k]); hi.append(dem[k])
    for s in range(n):
        r = np.zeros(nv)
        r[n + s::n] = 1
        r[s] = -cap[s]
        rows.append(r); lo.append(-np.inf); hi.append(0)
    ub = np.concatenate([np.ones(n), np.full(n * n, max(dem) if max(dem) else 0)])
    res = milp(c, constraints=LinearConstraint(np.array(rows), lo, hi),
               integrality=np.ones(nv), bounds=Bounds(0, ub))
    return res.fun


def test_single_facility():
    inst = Instance.on_line([0], [1, 2], [3], 1, 2)
    sol = exact_lbubfl(inst)
    assert sol.open == {0} and cost(inst, sol) == pytest.approx(6.0)


def test_infeasible():
    inst = Instance.on_line([0], [1, 2, 3], [0], 4, 5)
    with pytest.raises(InfeasibleError):
        exact_lbubfl(inst)


def test_size_cap():
    inst = Instance.on_line(range(13), [0], [0] * 13, 1, 1)
    with pytest.raises(ParameterError):
        exact_lbubfl(inst)


def test_t1_matches_enumeration(t1):
    assert exact_lbubfl_cost(t1) == pytest.approx(brute_lbubfl(t1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_lbubfl_matches_enumeration(seed):
    nf, nc, lower, upper = random_parameters(seed, 3, 7, min_facilities=1)
    inst = random_instance(seed, nf, nc, lower, upper)
    assert exact_lbubfl_cost(inst) == pytest.approx(brute_lbubfl(inst))


def i2_from(points, counts, lower):
    # clients sit on the facility points; facility k holds counts[k] of them
    cl = [p for p, n in zip(points, counts) for _ in range(n)]
    base = Instance.from_coords(points, cl, np.zeros(len(points)), lower,
                                max(lower, len(cl)))
    members, nxt = {}, 0
    for k, n in enumerate(counts):
        members[k] = tuple(range(nxt, nxt + n))
        nxt += n
    return I2Instance(base, tuple(range(len(points))), dict(enumerate(counts)), members, lower)


def test_lbfl_one_facility():
    i2 = i2_from([(0, 0)], [4], 2)
    assert exact_lbfl(i2) == 0.0


def test_lbfl_colocated_facilities_symmetric():
    i2 = i2_from([(0, 0), (0, 0), (3, 0)], [1, 1, 2], 4)
    assert exact_lbfl(i2) == pytest.approx(6.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_lbfl_matches_enumeration_and_is_monotone(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4))
    counts = [int(v) for v in rng.integers(1, 3, k)]
    lower = int(rng.integers(1, sum(counts) + 1))
    pts = [tuple(p) for p in rng.random((k + 1, 2))]
    small = i2_from(pts[:k], counts, lower)
    big = i2_from(pts, counts + [0], lower)
    got = exact_lbfl(small)
    assert got == pytest.approx(brute_lbubfl(small.as_instance(), upper=sum(counts)))
    assert exact_lbfl(big) <= got + 1e-12


def test_cfl_zero_and_single_demand():
    site = lambda k, d, cap, f: CflSite(str(k), k, "small", d, cap, f, 1.0, ())
    icap = CflInstance((site(0, 0, 1, 1.0),), np.zeros((1, 1)), 0.5, 1)
    assert exact_cfl(icap) == 0.0
    d = np.array([[0, 2], [2, 0]], float)
    icap = CflInstance((site(0, 2, 2, 5.0), site(1, 0, 2, 1.0)), d, 0.5, 2)
    assert exact_cfl(icap) == pytest.approx(5.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_cfl_matches_milp(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    pts = rng.random((n, 2))
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    demand = rng.integers(0, 3, n)
    capacity = rng.integers(1, 5, n)
    demand = np.minimum(demand, capacity)
    costs = rng.random(n) * rng.choice([0, 1], n)
    sites = tuple(CflSite(str(k), k, "small", int(demand[k]), int(capacity[k]),
                          float(costs[k]), 1.0, ()) for k in range(n))
    icap = CflInstance(sites, d, 0.5, int(capacity.max()))
    if demand.sum() == 0:
        assert exact_cfl(icap) == 0.0
        return
    assert exact_cfl(icap) == pytest.approx(milp_cfl(icap), rel=1e-7, abs=1e-9)
