"""Mean decoding delay against the connectivity index, one curve per policy.

A reduced-scale version of the connectivity experiment: writes
``demo_results/connectivity.{csv,json,svg}`` and prints the gap between the
optimal schedule and the two baselines at every point.
Run:  python demos/connectivity_sweep.py [trials]
"""

import os
import sys
from dataclasses import replace

from idnc_d2d.cli import emit_outputs, parse_config, run_sweep

here = os.path.dirname(os.path.abspath(__file__))
spec = parse_config(os.path.join(here, "configs", "sweep_connectivity.json"))
if len(sys.argv) > 1:
    spec = replace(spec, base=replace(spec.base, trials=int(sys.argv[1])))

rows = run_sweep(spec, on_row=lambda r: print(f"C={r.value:.1f} {r.policy.value:17s} "
                                              f"{r.mean_delay:.3f}", flush=True))
paths = emit_outputs(rows, "demo_results", spec, "connectivity")

table = {(r.value, r.policy.value): r.mean_delay for r in rows}
print("\n  C   FC gap  heuristic gap")
for c in spec.values:
    opt = table[c, "PC_D2D_OPTIMAL"]
    fc, heur = table[c, "FC_D2D"], table[c, "PC_D2D_HEURISTIC"]
    print(f"{c:4.1f}  {(fc - opt) / fc:6.1%}  {(heur - opt) / opt:6.1%}")
print("\nwrote", ", ".join(paths.values()))
