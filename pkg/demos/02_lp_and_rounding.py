# The LP relaxation and the rounding that turns it into integrally opened facilities.
import numpy as np

from lbubfl.generate import random_instance
from lbubfl.lp import build_relaxation, solve_lp
from lbubfl.tricriteria import build_tricriteria, form_clusters, round_dense, sparsify

inst = random_instance(seed=4, n_facilities=6, n_clients=30, lower=3, upper=5,
                       geometry="clustered")

desc = build_relaxation(inst)
print(desc.n_vars, "variables,", desc.n_rows, "rows")

# HiGHS and the in-package simplex should agree on the optimum
fast = solve_lp(desc, inst.fc)
slow = solve_lp(desc, inst.fc, method="simplex")
print("highs", round(fast.objective, 6), "simplex", round(slow.objective, 6))

centers = sparsify(inst, fast, ell=2.01)
clusters = form_clusters(inst, centers, fast)
for cl in clusters:
    print(f"centre {cl.center:2d} {cl.kind:6s} demand {cl.demand:6.2f} facilities {cl.members}")
    if cl.kind == "dense":
        dr = round_dense(inst, cl, fast, 2.01)
        print("   z  ", {i: round(v, 2) for i, v in dr.z.items()})
        print("   z' ", {i: round(v, 2) for i, v in dr.z_prime.items()})
        print("   open", [i for i, v in dr.z_hat.items() if v])

tri = build_tricriteria(inst, frac=fast)
loads = np.bincount(tri.assign, minlength=inst.n_facilities)
print("loads", loads[loads > 0], "alpha", round(tri.measured_alpha, 3),
      "beta", round(tri.measured_beta, 3), "cost/LP", round(tri.cost / fast.objective, 3))
