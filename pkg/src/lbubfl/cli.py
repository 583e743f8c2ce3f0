"""Command line entry point: ``lbubfl gen | solve | bench | oracle``.

Exit codes: 0 ok, 2 infeasible, 3 metric, 4 parameter, 5 internal
invariant violated, 6 pipeline abort (lower-bound factor not above 1/2),
1 for anything else (unreadable files and the like).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import oracle
from .core import (InfeasibleError, InvariantViolation, MetricError, ParameterError,
                   PipelineAbort, instance_to_dict, load_instance, solution_to_dict)
from .generate import GEOMETRIES, check_counts, random_instance
from .lp import build_relaxation
from .pipeline import solve
from .tricriteria import DEFAULT_ELL, DEFAULT_THRESHOLD

log = logging.getLogger("lbubfl")

EXIT_OK, EXIT_OTHER, EXIT_INFEASIBLE, EXIT_METRIC, EXIT_PARAM, EXIT_INVARIANT, EXIT_ABORT = (
    0, 1, 2, 3, 4, 5, 6)
BENCH_COLUMNS = ["id", "|F|", "|C|", "L", "U", "lp_opt", "opt?", "cost", "ratio", "alpha",
                 "beta_final", "runtime_ms"]


def exit_code(exc: BaseException) -> int:
    # order matters: PipelineAbort and InvariantViolation are not infeasibility
    for kind, code in ((PipelineAbort, EXIT_ABORT), (InvariantViolation, EXIT_INVARIANT),
                       (MetricError, EXIT_METRIC), (ParameterError, EXIT_PARAM),
                       (InfeasibleError, EXIT_INFEASIBLE)):
        if isinstance(exc, kind):
            return code
    return EXIT_OTHER


def _dump(obj, path: str | None):
    text = json.dumps(obj, indent=1, default=_jsonable) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (set, frozenset, tuple)):
        return sorted(v) if isinstance(v, (set, frozenset)) else list(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


def cmd_gen(args) -> int:
    check_counts(args.facilities, args.clients, args.lower, args.upper)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    children = np.random.SeedSequence(args.seed).spawn(args.count)
    width = len(str(max(args.count - 1, 0)))
    for k, child in enumerate(children):
        inst = random_instance(child, args.facilities, args.clients, args.lower, args.upper,
                               args.geometry)
        data = instance_to_dict(inst)
        data["meta"] = {"seed": args.seed, "index": k, "geometry": args.geometry}
        path = out / f"inst_{k:0{width}d}.json"
        path.write_text(json.dumps(data, indent=1) + "\n")
        log.info("wrote %s", path)
    return EXIT_OK


def _pipeline_kwargs(args) -> dict:
    return dict(ell=args.ell, threshold=args.dense_threshold, delta=args.delta,
                post_flow=args.post_flow, lp_method=args.lp)


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    if args.export_lp:
        Path(args.export_lp).write_text(build_relaxation(inst).to_text())
    res = solve(inst, check_invariants=args.check_invariants, trace=args.trace,
                **_pipeline_kwargs(args))
    report = res.report
    meta = json.loads(Path(args.instance).read_text()).get("meta")
    if meta:
        report["instance_meta"] = meta
    if args.oracle:
        report["oracle_opt"] = oracle.exact_lbubfl_cost(inst)
    _dump({"solution": solution_to_dict(inst, res.solution), "report": report}, args.out)
    return EXIT_OK


def _bench_row(path: Path, args) -> dict:
    row = dict.fromkeys(BENCH_COLUMNS, "")
    row["id"] = path.stem
    t0 = time.perf_counter()
    try:
        inst = load_instance(path)
        row.update({"|F|": inst.n_facilities, "|C|": inst.n_clients, "L": inst.lower,
                    "U": inst.upper})
        res = solve(inst, **_pipeline_kwargs(args))
        rep = res.report
        row.update({"lp_opt": f"{rep['lp_opt']:.10g}", "cost": f"{res.cost:.10g}",
                    "alpha": f"{rep['stages']['tricriteria']['alpha']:.6g}",
                    "beta_final": f"{rep['stages']['final']['beta']:.6g}"})
        if inst.n_facilities <= args.oracle_max_facilities:
            opt = oracle.exact_lbubfl_cost(inst)
            row["opt?"] = f"{opt:.10g}"
            row["ratio"] = f"{res.cost / opt:.6g}" if opt > 0 else ""
    except Exception as exc:  # recorded in the row; the run goes on
        row["cost"] = f"error:{type(exc).__name__}:{exit_code(exc)}"
        log.warning("%s failed: %s", path, exc)
    row["runtime_ms"] = f"{1000 * (time.perf_counter() - t0):.1f}"
    return row


def cmd_bench(args) -> int:
    paths = sorted(Path(args.directory).glob("*.json"))
    fh = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        w.writeheader()
        for p in paths:
            w.writerow(_bench_row(p, args))
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = load_instance(args.instance)
    sol = oracle.exact_lbubfl(inst)
    _dump(solution_to_dict(inst, sol), args.out)
    return EXIT_OK


def _add_pipeline_flags(p):
    p.add_argument("--ell", type=float, default=DEFAULT_ELL, help="ball radius factor, in (2, 3]")
    p.add_argument("--dense-threshold", type=float, default=DEFAULT_THRESHOLD,
                   help="open the leftover fractional facility of a dense cluster above this")
    p.add_argument("--delta", type=float, default=None,
                   help="override the opening-cost scale of the capacitated instance")
    p.add_argument("--post-flow", action="store_true",
                   help="re-optimise the final assignment over the chosen facilities")
    p.add_argument("--lp", choices=["highs", "simplex"], default="highs")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lbubfl", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write random instances")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--facilities", "-F", type=int, required=True)
    g.add_argument("--clients", "-C", type=int, required=True)
    g.add_argument("--lower", "-L", type=int, required=True)
    g.add_argument("--upper", "-U", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--geometry", choices=GEOMETRIES, default="square")
    g.add_argument("--out", "-o", default=".")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run the full pipeline on one instance")
    s.add_argument("instance")
    _add_pipeline_flags(s)
    s.add_argument("--check-invariants", action="store_true")
    s.add_argument("--trace", action="store_true", help="include the forest trace in the report")
    s.add_argument("--export-lp", metavar="PATH", help="write the LP relaxation as text")
    s.add_argument("--oracle", action="store_true", help="also compute the exact optimum")
    s.add_argument("--out", "-o", default=None)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="solve every *.json in a directory, print CSV")
    b.add_argument("directory")
    _add_pipeline_flags(b)
    b.add_argument("--oracle-max-facilities", type=int, default=8)
    b.add_argument("--out", "-o", default=None)
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", help="exact optimum by enumeration (at most 12 facilities)")
    o.add_argument("instance")
    o.add_argument("--out", "-o", default=None)
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        report = getattr(exc, "report", None)
        if report is not None:
            _dump({"error": str(exc), "report": report}, None)
        print(f"lbubfl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
