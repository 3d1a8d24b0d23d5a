"""Local IDNC graphs: choosing the XOR combination one transmitter should send."""

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

from ._bits import as_mask, members
from .clique import WeightedGraph, max_weight_clique
from .model import (ErasureModel, PacketType, SideInformation, Topology,
                    classify_packet)


@dataclass(frozen=True)
class LocalIdncGraph:
    """One vertex per (device k, packet l) with l wanted by k and held by the owner.

    Vertices are sorted by (device, packet).  Two vertices (k, l) and (m, n)
    are adjacent when l == n, or when l is held by m and n is held by k.
    """

    owner: int
    vertices: Tuple[Tuple[int, int], ...]
    graph: WeightedGraph

    def __len__(self):
        return len(self.vertices)


class Combination(NamedTuple):
    packets: int  # bitmask of XORed source packets
    targets: int  # bitmask of devices that decode it instantly
    value: float  # sum over targets of (1 - p_owner,target)


EMPTY_COMBINATION = Combination(0, 0, 0.0)


def _local_graph(has: Sequence[int], full: int, owner: int, zone: int,
                 loss_row) -> LocalIdncGraph:
    held = has[owner]
    vertices = []
    for k in members(zone):
        for l in members(full & ~has[k] & held):
            vertices.append((k, l))
    by_packet = {}
    by_device = {}
    for idx, (k, l) in enumerate(vertices):
        by_packet[l] = by_packet.get(l, 0) | 1 << idx
        by_device[k] = by_device.get(k, 0) | 1 << idx
    adjacency = []
    for idx, (k, l) in enumerate(vertices):
        # vertices whose packet k already holds
        k_holds = 0
        for pkt, vs in by_packet.items():
            if has[k] >> pkt & 1:
                k_holds |= vs
        # vertices whose device already holds l
        holds_l = 0
        for dev, vs in by_device.items():
            if has[dev] >> l & 1:
                holds_l |= vs
        nb = by_packet[l] | (holds_l & k_holds)
        adjacency.append(nb & ~(1 << idx))
    weights = tuple(1.0 - float(loss_row[k]) for k, _ in vertices)
    graph = WeightedGraph.__new__(WeightedGraph)
    # skip the O(n^2) symmetry validation; the construction is symmetric by design
    object.__setattr__(graph, "weights", weights)
    object.__setattr__(graph, "adjacency", tuple(adjacency))
    object.__setattr__(graph, "payloads", tuple(vertices))
    return LocalIdncGraph(owner, tuple(vertices), graph)


def build_local_graph(state: SideInformation, topology: Topology, erasure: ErasureModel,
                      i: int, opportunity) -> LocalIdncGraph:
    """Local IDNC graph of transmitter ``i`` restricted to the devices in ``opportunity``."""
    zone = as_mask(opportunity)
    if zone & ~(topology.coverage[i] & ~(1 << i)):
        raise ValueError(f"opportunity set must lie inside the coverage of device {i}, "
                         "excluding the device itself")
    return _local_graph(state.has, state.full_mask, i, zone, erasure.d2d_loss[i])


def best_combination(local: LocalIdncGraph) -> Combination:
    """Maximum-weight clique of the local graph, read back as (packets, targets, value)."""
    if not local.vertices:
        return EMPTY_COMBINATION
    clique = max_weight_clique(local.graph)
    packets = targets = 0
    for v in clique.members:
        k, l = local.vertices[v]
        packets |= 1 << l
        targets |= 1 << k
    return Combination(packets, targets, clique.weight)


def optimal_combination(state: SideInformation, topology: Topology, erasure: ErasureModel,
                        i: int, opportunity) -> Combination:
    return best_combination(build_local_graph(state, topology, erasure, i, opportunity))


def decode(state: SideInformation, device: int, combination) -> SideInformation:
    """Apply a successful reception; only an instantly decodable packet changes state."""
    kind, packet = classify_packet(state, device, combination)
    if kind is not PacketType.INSTANTLY_DECODABLE:
        return state
    return state.with_has(device, state.has[device] | 1 << packet)


class CombinationCache:
    """Memoises optimal combinations by (transmitter, opportunity mask) for one state."""

    def __init__(self, state: SideInformation, erasure: ErasureModel):
        self.state = state
        self.erasure = erasure
        self._memo = {}
        self.wanting = state.wanting_mask()

    def __call__(self, i: int, zone: int) -> Combination:
        # only wanting devices can become vertices
        key = (i, zone & self.wanting)
        hit = self._memo.get(key)
        if hit is None:
            local = _local_graph(self.state.has, self.state.full_mask, i, key[1],
                                 self.erasure.d2d_loss[i])
            hit = best_combination(local)
            self._memo[key] = hit
        return hit
