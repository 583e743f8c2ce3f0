# A small benchmark: random instances, the solver, and the exact optimum where it is cheap.
import statistics
import time

from lbubfl import exact_lbubfl, solve
from lbubfl.core import cost
from lbubfl.generate import random_instance, random_parameters

rows = []
for seed in range(1, 31):
    nf, nc, lower, upper = random_parameters(seed, max_facilities=7, max_clients=14)
    inst = random_instance(seed, nf, nc, lower, upper)
    t0 = time.perf_counter()
    res = solve(inst)
    ms = 1000 * (time.perf_counter() - t0)
    opt = cost(inst, exact_lbubfl(inst))
    loads = res.solution.loads().values()
    rows.append((seed, nf, nc, lower, upper, res.report["lp_opt"], opt, res.cost,
                 min(loads) / lower, max(loads) / upper, ms))

print(f"{'seed':>4} {'F':>2} {'C':>3} {'L':>3} {'U':>3} {'LP':>8} {'OPT':>8} {'cost':>8} "
      f"{'a':>5} {'b':>5} {'ms':>6}")
for r in rows:
    print("{:4d} {:2d} {:3d} {:3d} {:3d} {:8.4f} {:8.4f} {:8.4f} {:5.2f} {:5.2f} {:6.1f}".format(*r))
ratios = [r[7] / r[6] for r in rows if r[6] > 0]
print("median cost/OPT", round(statistics.median(ratios), 4), "max", round(max(ratios), 4))
print("smallest load/L", round(min(r[8] for r in rows), 3))
