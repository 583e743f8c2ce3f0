import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from lbubfl.core import Instance, ParameterError, check_bounds, feasible_counts
from lbubfl.generate import random_instance, random_parameters
from lbubfl.lp import FractionalSolution, solve_relaxation
from lbubfl.tricriteria import (ball, build_tricriteria, check_filtering, form_clusters,
                                round_dense, sparsify)


def test_far_apart_clients_all_survive():
    inst = Instance.on_line([0, 10, 20], [0, 10, 20], [0, 0, 0], 1, 1)
    frac = solve_relaxation(inst)
    assert sparsify(inst, frac, 2.01) == [0, 1, 2]


def test_colocated_clients_lower_index_survives():
    inst = Instance.on_line([0], [1, 1], [0], 1, 2)
    frac = solve_relaxation(inst)
    assert sparsify(inst, frac, 2.5) == [0]


def test_ell_must_exceed_two(t1):
    with pytest.raises(ParameterError):
        build_tricriteria(t1, ell=2.0)
    with pytest.raises(ParameterError):
        build_tricriteria(t1, ell=3.5)


def test_bad_threshold(t1):
    with pytest.raises(ParameterError):
        build_tricriteria(t1, threshold=1.0)


def test_ball_contents(t1):
    frac = solve_relaxation(t1)
    for j in range(t1.n_clients):
        b = ball(t1, frac, j, 2.5)
        radius = 2.5 * frac.avg_connection_cost(j)
        expect = [i for i in range(3) if t1.fc[i, j] <= radius + 1e-9]
        assert list(b.members) == expect
        assert b.mass == pytest.approx(frac.y[expect].sum())


def test_clusters_partition_facilities(t1):
    frac = solve_relaxation(t1)
    centers = sparsify(t1, frac, 2.01)
    clusters = form_clusters(t1, centers, frac)
    members = sorted(i for c in clusters for i in c.members)
    assert members == [0, 1, 2]
    for c in clusters:
        assert c.kind == ("sparse" if c.demand <= t1.upper + 1e-9 else "dense")


def test_t1_tricriteria(t1):
    tri = build_tricriteria(t1)
    rep = check_bounds(t1, tri.solution)
    assert rep.min_load >= math.floor((1 - 1 / 2.01) * 2)
    assert rep.max_load <= math.ceil(1.5 * 3)
    assert check_filtering(t1, tri) == []
    assert tri.cost <= (10 * 2.01 + 4) * tri.lp.objective * (1 + 1e-6)


def _draw(seed, max_f=8, max_c=40):
    nf, nc, lower, upper = random_parameters(seed, max_f, max_c)
    return random_instance(seed, nf, nc, lower, upper, ["square", "clustered", "line"][seed % 3])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2.01, 2.5, 3.0]))
def test_tricriteria_bounds_and_cost(seed, ell):
    inst = _draw(seed)
    tri = build_tricriteria(inst, ell=ell)
    rep = check_bounds(inst, tri.solution)
    assert tri.measured_alpha > 0.5
    assert rep.min_load >= math.floor((1 - 1 / ell) * inst.lower)
    assert rep.max_load <= math.ceil(1.5 * inst.upper)
    assert tri.cost <= (10 * ell + 4) * tri.lp.objective * (1 + 1e-6) + 1e-9
    assert check_filtering(inst, tri) == []
    np.testing.assert_allclose(tri.x_bar.sum(axis=0), 1.0, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_dense_rounding(seed):
    rng = np.random.default_rng(seed)
    lower = int(rng.integers(1, 3))
    upper = lower + int(rng.integers(0, 2))
    nf = int(rng.integers(3, 8))
    nc = int(rng.integers(max(lower, 2 * upper), nf * upper + 1))
    assume(feasible_counts(nc, nf, lower, upper))
    inst = random_instance(seed, nf, nc, lower, upper, "clustered")
    frac = solve_relaxation(inst)
    for c in form_clusters(inst, sparsify(inst, frac, 2.01), frac):
        if c.kind != "dense":
            continue
        dr = round_dense(inst, c, frac, 2.01, 0.5)
        assert sum(0 < v < 1 for v in dr.z_prime.values()) <= 1
        assert sum(dr.z_prime.values()) == pytest.approx(sum(dr.z.values()))
        opened = sum(dr.z_hat.values())
        assert opened >= 1
        assert c.demand <= 1.5 * upper * opened * (1 + 1e-9)
        assert set(v for v in dr.z_hat.values()) <= {0.0, 1.0}


def test_default_threshold_from_ell(t1):
    tri = build_tricriteria(t1, ell=2.5, threshold=None)
    assert tri.threshold == pytest.approx(1 - 1 / 2.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.01, 3.0, 1000.0]))
def test_rescaling_the_metric_rescales_the_rounding(seed, factor):
    # the LP point is fixed, since a rescaled LP may return another optimal vertex
    inst = _draw(seed)
    frac = solve_relaxation(inst)
    big = inst.scaled(factor)
    frac_big = FractionalSolution(frac.x, frac.y, frac.objective * factor, frac.dist_fc * factor)
    a = build_tricriteria(inst, frac=frac)
    b = build_tricriteria(big, frac=frac_big)
    assert a.centers == b.centers and a.open == b.open
    assert b.cost == pytest.approx(factor * a.cost, rel=1e-9)
