"""Per-slot scheduling policies.

Every policy maps a network state to the :class:`~idnc_d2d.model.Schedule`
of one recovery transmission.
"""

import enum
from typing import Callable, Dict

from ._bits import members, popcount
from .clique import WEIGHT_TOL, WeightedGraph, max_weight_clique
from .coding import EMPTY_COMBINATION, Combination, CombinationCache
from .cooperation import (Weighting, best_schedule, build_pruned_graph, search_best_schedule,
                          singleton_graph)
from .model import (BASE_STATION, ErasureModel, Schedule, SideInformation, Topology,
                    Transmission, expected_delay, interference_mask)

ORACLE_MAX_DEVICES = 8
ORACLE_MAX_PACKETS = 4


class Policy(str, enum.Enum):
    PMP = "PMP"
    FC_D2D = "FC_D2D"
    PC_D2D_HEURISTIC = "PC_D2D_HEURISTIC"
    PC_D2D_OPTIMAL = "PC_D2D_OPTIMAL"
    ORACLE = "ORACLE"


OPTIMAL_METHODS = ("search", "pruned")


def schedule_pc_optimal(state: SideInformation, topology: Topology, erasure: ErasureModel,
                        weighting: Weighting = Weighting.DELAY_REDUCTION,
                        method: str = "search") -> Schedule:
    """Best schedule when transmitters may interfere.

    ``method="pruned"`` takes the max-weight clique of the layered cluster
    graph.  ``method="search"`` runs the branch and bound of
    :func:`~idnc_d2d.cooperation.search_best_schedule`, which reaches the
    same optimum and stays fast on sparse topologies where the layered
    graph blows up.
    """
    if method not in OPTIMAL_METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {OPTIMAL_METHODS}")
    if not state.wanting_mask():
        return Schedule()
    if method == "search":
        return search_best_schedule(state, topology, erasure, weighting).schedule
    coop = build_pruned_graph(state, topology, erasure, weighting)
    return best_schedule(coop)[0]


def schedule_pc_heuristic(state: SideInformation, topology: Topology, erasure: ErasureModel,
                          weighting: Weighting = Weighting.DELAY_REDUCTION) -> Schedule:
    """Max-weight clique over single devices: only non-overlapping transmitters."""
    if not state.wanting_mask():
        return Schedule()
    coop = singleton_graph(state, topology, erasure, weighting)
    return best_schedule(coop)[0]


def schedule_fc(state: SideInformation, topology: Topology, erasure: ErasureModel) -> Schedule:
    """Best single transmitter, each sending its best combination to its neighbours."""
    if not state.wanting_mask():
        return Schedule()
    combos = CombinationCache(state, erasure)
    best, best_delay = None, float("inf")
    for i in range(state.num_devices):
        c = combos(i, topology.coverage[i] & ~(1 << i))
        cand = Schedule((Transmission(i, c.packets, c.targets),))
        d = expected_delay(state, topology, erasure, cand)
        if d < best_delay - WEIGHT_TOL:
            best, best_delay = cand, d
    return best


def schedule_pmp(state: SideInformation, erasure: ErasureModel) -> Schedule:
    """Base station, holding the whole frame and reaching everyone, sends the
    combination that maximises the expected number of instant decodings."""
    wanting = state.wanting_mask()
    if not wanting:
        return Schedule()
    full = state.full_mask
    vertices = [(k, l) for k in members(wanting) for l in members(full & ~state.has[k])]
    n = len(vertices)
    adj = [0] * n
    for u, (k, l) in enumerate(vertices):
        for v in range(u + 1, n):
            m, pkt = vertices[v]
            if l == pkt or (state.has[m] >> l & 1 and state.has[k] >> pkt & 1):
                adj[u] |= 1 << v
                adj[v] |= 1 << u
    q = erasure.bs_loss
    graph = WeightedGraph(tuple(1.0 - float(q[k]) for k, _ in vertices), tuple(adj),
                          tuple(vertices))
    clique = max_weight_clique(graph)
    packets = targets = 0
    for v in clique.members:
        k, l = vertices[v]
        packets |= 1 << l
        targets |= 1 << k
    return Schedule((Transmission(BASE_STATION, packets, targets),))


def _best_combination_by_scan(state: SideInformation, erasure: ErasureModel, i: int,
                              zone: int) -> Combination:
    """Try every subset of the transmitter's Has set."""
    held = members(state.has[i])
    wanting = [(j, state.wants_mask(j), 1.0 - erasure.d2d_loss[i, j])
               for j in members(zone) if state.wants_mask(j)]
    best = EMPTY_COMBINATION
    best_key = ()
    for sub in range(1, 1 << len(held)):
        kappa = 0
        for b, pkt in enumerate(held):
            if sub >> b & 1:
                kappa |= 1 << pkt
        targets, value = 0, 0.0
        for j, w, gain in wanting:
            if popcount(kappa & w) == 1:
                targets |= 1 << j
                value += gain
        key = tuple(members(kappa))
        if value > best.value + WEIGHT_TOL or (abs(value - best.value) <= WEIGHT_TOL
                                               and best.packets and key < best_key):
            best, best_key = Combination(kappa, targets, value), key
    return best


def schedule_oracle(state: SideInformation, topology: Topology,
                    erasure: ErasureModel) -> Schedule:
    """Exhaustive search over every transmitter set and every combination.

    For a fixed transmitter set, each transmitter's combination only affects
    its own term of the expected delay, so the combinations are searched
    per transmitter (all subsets of its Has set).
    """
    m, n = state.num_devices, state.num_packets
    if m > ORACLE_MAX_DEVICES or n > ORACLE_MAX_PACKETS:
        raise ValueError(f"oracle limited to M <= {ORACLE_MAX_DEVICES} and "
                         f"N <= {ORACLE_MAX_PACKETS}, got M={m}, N={n}")
    if not state.wanting_mask():
        return Schedule()
    best, best_delay, best_key = Schedule(), float("inf"), None
    for a in range(1 << m):
        interference = interference_mask(topology, a)
        txs = []
        for i in members(a):
            zone = topology.coverage[i] & ~(a | interference)
            c = _best_combination_by_scan(state, erasure, i, zone)
            txs.append(Transmission(i, c.packets, c.targets))
        cand = Schedule(tuple(txs))
        d = expected_delay(state, topology, erasure, cand)
        key = (tuple(members(a)), tuple(tuple(members(t.combination)) for t in txs))
        if d < best_delay - WEIGHT_TOL or (abs(d - best_delay) <= WEIGHT_TOL and key < best_key):
            best, best_delay, best_key = cand, d, key
    return best


def get_policy(policy) -> Callable[[SideInformation, Topology, ErasureModel], Schedule]:
    policy = Policy(policy)
    if policy is Policy.PMP:
        return lambda state, topology, erasure: schedule_pmp(state, erasure)
    return _POLICIES[policy]


_POLICIES: Dict[Policy, Callable] = {
    Policy.FC_D2D: schedule_fc,
    Policy.PC_D2D_HEURISTIC: schedule_pc_heuristic,
    Policy.PC_D2D_OPTIMAL: schedule_pc_optimal,
    Policy.ORACLE: schedule_oracle,
}
