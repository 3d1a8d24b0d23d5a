"""Three devices on a line, two packets: every quantity of one recovery slot.

Device 0 holds both packets, device 1 holds packet 0, device 2 holds packet 1.
Run:  python demos/line_walkthrough.py
"""

import numpy as np

from idnc_d2d import (ErasureModel, Schedule, SideInformation, Topology, Weighting,
                      build_full_graph, expected_delay, interference_set, opportunity_zone,
                      shadow_set)
from idnc_d2d.cooperation import cluster_weight
from idnc_d2d.schedulers import Policy, get_policy
from idnc_d2d.simulator import run_recovery

state = SideInformation.from_sets(2, [{0, 1}, {0}, {1}])
topology = Topology.from_edges(3, [(0, 1), (1, 2)])
erasure = ErasureModel.uniform(3, 0.1, 0.2)

print("wants:", [sorted(state.wants_set(i)) for i in range(3)])
for A in ({1}, {0, 2}):
    zones = {i: sorted(opportunity_zone(topology, A, i)) for i in A}
    print(f"A={sorted(A)}: interfered {sorted(interference_set(topology, A))}, "
          f"shadowed {sorted(shadow_set(topology, A))}, zones {zones}")

# the middle device relays packet 0 to device 2; device 0 wants nothing
relay = Schedule.build({1: ([0], [2])})
both_ends = Schedule.build({0: ([0, 1], []), 2: ([1], [])})
print("expected delay, 1 relays:   ", expected_delay(state, topology, erasure, relay))
print("expected delay, 0 and 2 send:", expected_delay(state, topology, erasure, both_ends))

print("\nsingle-device cluster weights")
for w in Weighting:
    print(f"  {w.value:16s}", [round(cluster_weight(state, topology, erasure, {i}, w), 3)
                                for i in range(3)])

coop = build_full_graph(state, topology, erasure)
print(f"\nfull cooperation graph: {len(coop)} clusters {coop.cluster_keys()}, "
      f"{len(coop.graph.edges())} edges")

print("\npolicy choices (ties go to the smallest device id)")
for pid in Policy:
    sched = get_policy(pid)(state, topology, erasure)
    desc = ", ".join(f"{t.device}->{sorted(t.target_set)} sends {sorted(t.packets)}"
                     for t in sched.transmissions)
    print(f"  {pid.value:17s} {desc:40s} delay {expected_delay(state, topology, erasure, sched):.2f}")

rng = np.random.default_rng(0)
res = run_recovery(state, topology, erasure, Policy.PC_D2D_OPTIMAL, rng, 50)
print(f"\none full recovery: {res.rounds_used} slots, delays per device {res.per_device_delay}")
