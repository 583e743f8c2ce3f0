# From the rounded solution to a capacitated instance, solved by local search.
from lbubfl import exact_cfl
from lbubfl.cfl import cfl_cost, normalize_self_service, solve_cfl
from lbubfl.generate import random_instance
from lbubfl.transform import delta_default, to_i1, to_i2, to_icap
from lbubfl.tricriteria import build_tricriteria

inst = random_instance(seed=11, n_facilities=8, n_clients=40, lower=6, upper=7)
tri = build_tricriteria(inst)

i1 = to_i1(inst, tri)  # clients moved onto their facility
i2 = to_i2(i1)  # only the opened facilities, free, no upper bound
print("clients per opened facility", i2.counts)

delta = delta_default(min(1.0, tri.measured_alpha))
icap = to_icap(i2, delta)
print(f"delta = {delta:.4f}")
for s in icap.sites:
    print(f"  site {s.id:4s} {s.role:7s} demand {s.demand} capacity {s.capacity} "
          f"cost {s.open_cost:.3f}")

sol = solve_cfl(icap)
norm = normalize_self_service(icap, sol)
print("local search", round(cfl_cost(icap, sol), 4), "after rewiring", round(cfl_cost(icap, norm), 4))
if icap.n_sites <= 12:
    print("exact       ", round(exact_cfl(icap), 4))
print("shipments", {(icap.sites[k].id, icap.sites[s].id): a for (k, s), a in norm.ship.items()})
