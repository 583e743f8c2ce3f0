"""End-to-end solver: tri-criteria rounding, the capacitated detour, tree repair."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from . import cfl, treefix
from .core import (Instance, InvariantViolation, MetricError, Solution, check_bounds, cost,
                   validate_metric)
from .mcflow import bounded_assignment
from .transform import delta_default, to_i1, to_i2, to_icap
from .tricriteria import DEFAULT_ELL, DEFAULT_THRESHOLD, build_tricriteria, check_filtering


@dataclass
class PipelineResult:
    solution: Solution
    report: dict
    tri: object = None
    icap: object = None
    ascap: object = None
    reassignment: object = None
    forest: object = None

    @property
    def cost(self) -> float:
        return self.report["cost"]


class _Clock:
    def __init__(self):
        self.times = {}

    def __call__(self, name):
        clock = self

        class _Span:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                clock.times[name] = 1000 * (time.perf_counter() - self.t)

        return _Span()


def solve(inst: Instance, ell: float = DEFAULT_ELL, threshold: float = DEFAULT_THRESHOLD,
          delta: float | None = None, post_flow: bool = False,
          check_invariants: bool = False, check_metric: bool = True,
          lp_method: str = "highs", trace: bool = False) -> PipelineResult:
    """Solution that meets every lower bound exactly.

    ``check_invariants`` raises InvariantViolation if any structural check
    recorded a violation; the checks themselves always run and the
    solution does not depend on the flag.
    """
    clock = _Clock()
    if check_metric:
        with clock("metric"):
            bad = validate_metric(inst)
        if bad:
            raise MetricError(f"distance matrix is not a metric: {bad[0]}")
    checks: dict[str, list] = {}

    with clock("tricriteria"):
        tri = build_tricriteria(inst, ell, threshold, lp_method=lp_method)
    if check_invariants:
        checks["filtering"] = check_filtering(inst, tri)
    beta_t = max(1.0, tri.measured_beta)
    report = {
        "params": {"ell": ell, "threshold": threshold, "post_flow": post_flow,
                   "lp_method": lp_method},
        "n_facilities": inst.n_facilities, "n_clients": inst.n_clients,
        "L": inst.lower, "U": inst.upper,
        "lp_opt": tri.lp.objective,
        "stages": {"tricriteria": {"alpha": tri.measured_alpha, "beta": tri.measured_beta,
                                   "cost": tri.cost, "open": len(tri.open),
                                   "repaired": tri.repaired, "notes": tri.notes}},
        "cfl_solver": cfl.SOLVER_NAME,
    }

    i1 = to_i1(inst, tri)
    i2 = to_i2(i1)
    res = PipelineResult(solution=tri.solution, report=report, tri=tri)
    if len(i2.facilities) == 1:
        # one facility already holds every client, and |C| >= L
        final = tri.solution
        report["delta"] = None
    else:
        alpha = min(1.0, tri.measured_alpha)
        d = delta_default(alpha) if delta is None else float(delta)
        report["delta"] = d
        with clock("cfl"):
            icap = to_icap(i2, d)
            raw = cfl.solve_cfl(icap)
            ascap = cfl.normalize_self_service(icap, raw)
        res.icap, res.ascap = icap, ascap
        report["stages"]["cfl"] = {"cost": cfl.cfl_cost(icap, ascap),
                                   "sites": icap.n_sites, "open": len(ascap.open)}
        checks["cfl_feasible"] = cfl.cfl_errors(icap, ascap)
        if cfl.cfl_cost(icap, ascap) > cfl.cfl_cost(icap, raw) * (1 + 1e-9) + 1e-9:
            checks["cfl_feasible"].append("self-service rewiring raised the cost")

        with clock("reassign"):
            reass = treefix.type1_reassign(i1, icap, ascap)
            P, Pbar = treefix.partition_P(reass, inst.lower)
        res.reassignment = reass
        checks["type1_bounds"] = treefix.type1_bound_errors(reass, inst.lower,
                                                             beta_t * inst.upper)
        checks["closed_sites_in_P"] = treefix.closed_site_errors(icap, ascap, P)
        report["stages"]["type1"] = {"P": len(P), "Pbar": len(Pbar),
                                     "moved": reass.moved}

        with clock("trees"):
            forest = treefix.build_forest(i2.facilities, P, Pbar, inst.ff,
                                          reass.holdings, inst.lower)
            pi = dict(reass.loads)
            treefix.run_forest(forest)
            final = treefix.assemble_final(inst, i1, forest)
        res.forest = forest
        for name in ("forest_structure", "nonroot_2l", "sibling_3l", "edge_l", "root_3l"):
            checks[name] = forest.violations.get(name, [])
        loads = final.loads()
        checks["p_root_absorb"] = [
            f"P facility {r[1]} ends with {loads[r[1]]} > pi + L = {pi[r[1]] + inst.lower}"
            for r in forest.roots if r[0] == "P" and loads.get(r[1], 0) > pi[r[1]] + inst.lower]
        report["stages"]["trees"] = {"roots": len(forest.roots),
                                     "root_pairs": sum(r[0] == "pair" for r in forest.roots),
                                     "max_nonroot": forest.max_nonroot,
                                     "moves": len(forest.events)}
        if trace:
            report["trace"] = {"icap": icap.to_dict(),
                               "ascap": [[icap.sites[k].id, icap.sites[s].id, a]
                                         for (k, s), a in sorted(ascap.ship.items())],
                               "P": P, "Pbar": Pbar, "forest": forest.to_dict()}

    upper_cap = math.ceil((beta_t + 1) * inst.upper - 1e-9)
    if post_flow:
        with clock("post_flow"):
            hi = max(final.loads().values())
            assign = bounded_assignment(inst.fc, sorted(final.open), inst.lower, hi)
            final = Solution(final.open, tuple(assign))
    rep = check_bounds(inst, final)
    if rep.min_load < inst.lower:
        raise InvariantViolation(f"final solution leaves facility below L: {rep.lower_violations}")
    checks["final_upper"] = ([] if rep.max_load <= upper_cap else
                             [f"max load {rep.max_load} exceeds ceil((beta+1)U) = {upper_cap}"])
    res.solution = final
    report["cost"] = cost(inst, final)
    report["ratio_to_lp"] = report["cost"] / tri.lp.objective if tri.lp.objective > 0 else None
    report["stages"]["final"] = {"alpha": rep.measured_alpha, "beta": rep.measured_beta,
                                 "min_load": rep.min_load, "max_load": rep.max_load,
                                 "upper_cap": upper_cap, "open": len(final.open)}
    report["invariants"] = {k: {"ok": not v, "violations": v} for k, v in checks.items()}
    report["timings_ms"] = clock.times
    if check_invariants:
        failed = {k: v for k, v in checks.items() if v}
        if failed:
            name, msgs = next(iter(failed.items()))
            err = InvariantViolation(f"{name}: {msgs[0]}")
            err.report = report
            raise err
    return res
