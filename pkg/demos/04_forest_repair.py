# Facilities short of L hang off their nearest neighbour; children cascade towards the root.
import json

import numpy as np

from lbubfl.treefix import build_forest, process_node, run_forest

# root x at the origin holds 5 clients; children a..e sit on a circle around it
radii = [10, 9, 8, 7, 6]
slots = [0, 3, 1, 4, 2]
pts = np.array([(0.0, 0.0)] + [(r * np.cos(2 * np.pi * k / 5), r * np.sin(2 * np.pi * k / 5))
                                for r, k in zip(radii, slots)])
dist = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
counts = [5, 3, 6, 4, 2, 1]
holdings, nxt = {}, 0
for i, n in enumerate(counts):
    holdings[i] = list(range(nxt, nxt + n))
    nxt += n

forest = build_forest(range(6), [0], [1, 2, 3, 4, 5], dist, holdings, lower=5)
print("parents", forest.eta)
print("opened while processing x:", process_node(forest, 0))
for ev in forest.events:
    print(f"  {ev['kind']:8s} {ev['from']} -> {ev['to']}  ({ev['clients']} clients)")
print("clients at x now", forest.count(0))

# a root pair: two facilities that are each other's nearest, with one child below
pts = np.array([(0, 0), (1, 0), (2.5, 0)], float)
dist = np.abs(pts[:, None, 0] - pts[None, :, 0])
for child in (9, 11):
    f = build_forest(range(3), [], [0, 1, 2], dist,
                     {0: list(range(8)), 1: list(range(8, 14)),
                      2: list(range(14, 14 + child))}, lower=12)
    run_forest(f)
    print(f"child with {child}: opened {sorted(f.opened)}, loads",
          {i: f.count(i) for i in sorted(f.opened)})
print(json.dumps(f.to_dict())[:200], "...")
