"""Layered cluster graph versus the direct branch-and-bound search.

Both return the same optimum; the layered graph's size explodes on sparse
networks, which is why the search is the default optimal method.
Run:  python demos/pruned_graph_vs_search.py
"""

import time

import numpy as np

from idnc_d2d.clique import max_weight_clique
from idnc_d2d.cooperation import build_pruned_graph, search_best_schedule
from idnc_d2d.model import ErasureModel
from idnc_d2d.simulator import generate_topology, initial_phase

LIMIT = 5000  # clusters; beyond this the layered graph is abandoned

print(f"{'M':>3} {'C':>4} {'clusters':>9} {'layered s':>10} {'search s':>9} {'nodes':>7}  same optimum")
for m, c in [(10, 0.2), (12, 0.2), (14, 0.3), (16, 0.5), (20, 0.8), (20, 0.3), (20, 0.1)]:
    rng = np.random.default_rng(m * 100 + int(c * 10))
    topology = generate_topology(m, c, rng)
    state = initial_phase(m, 10, 0.2, rng)
    erasure = ErasureModel.uniform(m, 0.1, 0.2)

    t0 = time.perf_counter()
    found = search_best_schedule(state, topology, erasure)
    t_search = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        coop = build_pruned_graph(state, topology, erasure, limit=LIMIT)
        weight = max_weight_clique(coop.graph).weight
        size, same = str(len(coop)), abs(weight - found.weight) <= 1e-9
    except OverflowError:
        size, same = f">{LIMIT}", "n/a"
    t_layer = time.perf_counter() - t0
    print(f"{m:3d} {c:4.1f} {size:>9} {t_layer:10.3f} {t_search:9.4f} {found.nodes:7d}  {same}")
