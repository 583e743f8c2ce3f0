# Three facilities on a line, six clients, every open facility must serve 2 or 3.
# Walk the whole solver once and look at what each stage produced.
import math

from lbubfl import Instance, check_bounds, exact_lbubfl, solve
from lbubfl.core import cost

inst = Instance.on_line([0, 1, 2], [0.1, 0.2, 0.9, 1.1, 1.9, 2.1], [1, 1, 1], lower=2, upper=3)

res = solve(inst, check_invariants=True)
print("LP bound         ", round(res.report["lp_opt"], 4))
print("rounded solution ", sorted(res.tri.open), res.tri.assign)
print("final solution   ", sorted(res.solution.open), res.solution.assign)

opt = exact_lbubfl(inst)
print("exact optimum    ", round(cost(inst, opt), 4), "ours", round(res.cost, 4))

rep = check_bounds(inst, res.solution)
print("loads", rep.loads, "allowed", inst.lower, "to", math.ceil(2.5 * inst.upper))

# every recorded structural check, all empty on a healthy run
for name, r in res.report["invariants"].items():
    print(f"  {name:18s} {'ok' if r['ok'] else r['violations']}")
