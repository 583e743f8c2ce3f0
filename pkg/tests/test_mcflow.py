import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lbubfl.core import Instance
from lbubfl.mcflow import (FlowNetwork, InfeasibleFlow, bounded_assignment,
                           integralize_assignment, min_cost_flow)


def brute_force(net: FlowNetwork):
    """Cheapest feasible integral flow by trying every combination of arc values."""
    ranges = [np.arange(a.lower, a.upper + 1) for a in net.arcs]
    grid = np.array(list(itertools.product(*ranges)), dtype=float)
    inc = np.zeros((net.n_nodes, len(net.arcs)))
    for k, a in enumerate(net.arcs):
        inc[a.tail, k] += 1
        inc[a.head, k] -= 1
    ok = np.all(grid @ inc.T == np.asarray(net.supply), axis=1)
    if not ok.any():
        return None
    costs = grid[ok] @ np.array([a.cost for a in net.arcs])
    return costs.min()


def random_network(rng):
    n = int(rng.integers(2, 9))
    m = int(rng.integers(1, 8))
    net = FlowNetwork(n)
    for _ in range(m):
        u, v = rng.choice(n, 2, replace=False)
        lo = int(rng.integers(0, 3))
        hi = int(rng.integers(lo, 5))
        net.add_arc(int(u), int(v), lo, hi, float(rng.integers(-3, 10)))
    # supplies from a random feasible-ish flow so many instances are solvable
    f = [int(rng.integers(a.lower, a.upper + 1)) for a in net.arcs]
    for a, x in zip(net.arcs, f):
        net.supply[a.tail] += x
        net.supply[a.head] -= x
    return net


@pytest.mark.parametrize("seed", range(100))
def test_matches_enumeration(seed):
    net = random_network(np.random.default_rng(seed))
    expect = brute_force(net)
    if expect is None:
        with pytest.raises(InfeasibleFlow):
            min_cost_flow(net)
        return
    res = min_cost_flow(net)
    assert res.cost == expect
    for a, x in zip(net.arcs, res.flow):
        assert a.lower <= x <= a.upper


def test_infeasible_supply():
    net = FlowNetwork(2, supply=[3, -3])
    net.add_arc(0, 1, 0, 2, 1.0)
    with pytest.raises(InfeasibleFlow):
        min_cost_flow(net)


def test_negative_cycle_is_saturated():
    net = FlowNetwork(3)
    net.add_arc(0, 1, 0, 2, -1.0)
    net.add_arc(1, 2, 0, 2, -1.0)
    net.add_arc(2, 0, 0, 1, -1.0)
    res = min_cost_flow(net)
    assert res.cost == -3.0


def test_validate_rejects_unbalanced():
    net = FlowNetwork(2, supply=[1, 0])
    with pytest.raises(ValueError):
        min_cost_flow(net)


def test_integralize_split_clients():
    # two clients split half and half between facilities at x=0 and x=1
    inst = Instance.on_line([0, 1], [0.2, 0.9], [0, 0], 1, 1)
    frac = np.full((2, 2), 0.5)
    assign = integralize_assignment(inst, frac, [0, 1], 1, 1)
    assert assign == [0, 1]


def _fractional_from_two(rng, nf, nc, lo, hi):
    """Average of two integral assignments with loads in [lo, hi]."""
    def one():
        counts = np.full(nf, lo)
        for _ in range(nc - lo * nf):
            choices = np.flatnonzero(counts < hi)
            counts[rng.choice(choices)] += 1
        assign = np.repeat(np.arange(nf), counts)
        rng.shuffle(assign)
        m = np.zeros((nf, nc))
        m[assign, np.arange(nc)] = 1
        return m
    return (one() + one()) / 2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_integralize_bounds_and_cost(seed):
    rng = np.random.default_rng(seed)
    nf = int(rng.integers(1, 5))
    lo = int(rng.integers(0, 4))
    hi = lo + int(rng.integers(0, 3))
    nc = int(rng.integers(lo * nf, hi * nf + 1))
    if nc == 0:
        return
    inst = Instance.from_coords(rng.random((nf, 2)), rng.random((nc, 2)), np.zeros(nf), 1, 1)
    frac = _fractional_from_two(rng, nf, nc, lo, hi)
    assign = integralize_assignment(inst, frac, range(nf), lo, hi)
    loads = np.bincount(assign, minlength=nf)
    assert loads.min() >= lo and loads.max() <= hi
    frac_cost = float((frac * inst.fc).sum())
    int_cost = float(sum(inst.fc[i, j] for j, i in enumerate(assign)))
    assert int_cost <= frac_cost + 1e-9
    assert all(frac[i, j] > 0 for j, i in enumerate(assign))


def test_bounded_assignment_respects_bounds():
    rng = np.random.default_rng(3)
    dist = rng.random((3, 9))
    assign = bounded_assignment(dist, [0, 1, 2], 3, 3)
    assert sorted(np.bincount(assign)) == [3, 3, 3]
