import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lbubfl.core import Instance, MetricError, ParameterError, check_bounds, cost
from lbubfl.generate import random_instance, random_parameters, suite_instance
from lbubfl.oracle import exact_lbubfl_cost
from lbubfl.pipeline import solve


def test_t1_end_to_end(t1):
    res = solve(t1, check_invariants=True)
    rep = check_bounds(t1, res.solution)
    assert rep.min_load >= t1.lower
    assert rep.max_load <= math.ceil(2.5 * t1.upper)
    assert res.cost == pytest.approx(cost(t1, res.solution))
    assert res.report["lp_opt"] <= exact_lbubfl_cost(t1) + 1e-9


def test_single_facility_instance():
    inst = Instance.on_line([0], [1, 2, 3], [1], 2, 3)
    res = solve(inst, check_invariants=True)
    assert res.solution.open == {0} and res.report["delta"] is None


def test_metric_rejected():
    d = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], float)
    inst = Instance(("a", "b"), ("c",), np.zeros(2), d, 1, 1)
    with pytest.raises(MetricError):
        solve(inst)


def test_delta_override_recorded():
    inst = suite_instance(3)
    res = solve(inst, delta=0.3)
    if res.icap is not None:
        assert res.report["delta"] == 0.3 and res.icap.delta == 0.3


def test_bad_ell():
    with pytest.raises(ParameterError):
        solve(suite_instance(1), ell=2.0)


def test_deterministic():
    inst = suite_instance(17)
    a, b = solve(inst), solve(inst)
    assert a.solution == b.solution and a.cost == b.cost


def _draw(seed):
    nf, nc, lower, upper = random_parameters(seed, 10, 50)
    return random_instance(seed, nf, nc, lower, upper, ["square", "clustered", "line"][seed % 3])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_checking_does_not_change_solution(seed):
    inst = _draw(seed)
    assert solve(inst).solution == solve(inst, check_invariants=True).solution


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_post_flow_keeps_bounds_and_cost(seed):
    inst = _draw(seed)
    plain = solve(inst)
    tuned = solve(inst, post_flow=True)
    assert tuned.solution.open == plain.solution.open
    assert min(tuned.solution.loads().values()) >= inst.lower
    assert max(tuned.solution.loads().values()) <= max(plain.solution.loads().values())
    assert tuned.cost <= plain.cost + 1e-9
