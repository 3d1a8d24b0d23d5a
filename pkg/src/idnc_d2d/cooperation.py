"""Clusters of interfering transmitters and the cooperation graphs built from them.

A cluster is a set of transmitters whose coverage zones form one connected
blob (every split of the cluster leaves the two halves overlapping).  Any
transmitter set splits uniquely into mutually non-overlapping clusters, so
cliques of a graph whose vertices are clusters and whose edges join clusters
with disjoint total coverage are in one-to-one correspondence with
transmitter sets.  Giving each cluster the right weight turns schedule
selection into a maximum-weight clique problem.
"""

import enum
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ._bits import as_mask, lowest, members, popcount
from .clique import WEIGHT_TOL, Clique, WeightedGraph, max_weight_clique
from .coding import Combination, CombinationCache
from .model import (ErasureModel, Schedule, SideInformation, Topology, Transmission,
                    interference_mask)

FULL_GRAPH_LIMIT = 14


class Weighting(enum.Enum):
    """How a cluster is scored.

    ``DELAY_REDUCTION`` makes the weights of a clique add up to the number of
    wanting devices minus the expected delay of the corresponding schedule:
    each reachable wanting device contributes 1 if targeted and ``p`` (the
    chance its useless packet is erased) otherwise.

    ``COVERAGE_CREDIT`` credits every covered wanting device outside the
    cluster and its interference zone with a full unit, plus ``1 - p`` for
    each target.  It over-rewards coverage and is kept for comparison.
    """

    DELAY_REDUCTION = "delay-reduction"
    COVERAGE_CREDIT = "coverage-credit"


@dataclass(frozen=True)
class Cluster:
    members_mask: int
    coverage_mask: int
    interference_mask: int

    @classmethod
    def of(cls, topology: Topology, devices) -> "Cluster":
        z = as_mask(devices)
        if not z:
            raise ValueError("empty cluster")
        if not is_cohesive(topology, z):
            raise ValueError(f"devices {members(z)} do not form a single interfering cluster")
        return cls(z, topology.total_coverage_mask(z), interference_mask(topology, z))

    @property
    def members(self) -> frozenset:
        return frozenset(members(self.members_mask))

    @property
    def total_coverage(self) -> frozenset:
        return frozenset(members(self.coverage_mask))

    @property
    def intra_interference(self) -> frozenset:
        return frozenset(members(self.interference_mask))

    @property
    def key(self) -> Tuple[int, ...]:
        return tuple(members(self.members_mask))

    def opportunity(self, topology: Topology, i: int) -> int:
        return topology.coverage[i] & ~(self.members_mask | self.interference_mask)

    def __len__(self):
        return popcount(self.members_mask)


def is_cohesive(topology: Topology, devices) -> bool:
    """True when the coverage zones of ``devices`` form one overlapping blob."""
    z = as_mask(devices)
    if not z:
        return False
    start = lowest(z)
    reached = 1 << start
    cover = topology.coverage[start]
    grown = True
    while grown:
        grown = False
        for b in members(z & ~reached):
            if topology.coverage[b] & cover:
                reached |= 1 << b
                cover |= topology.coverage[b]
                grown = True
    return reached == z


@dataclass(frozen=True)
class Clustering:
    clusters: Tuple[Cluster, ...]

    @property
    def transmitter_mask(self) -> int:
        out = 0
        for c in self.clusters:
            out |= c.members_mask
        return out

    def member_sets(self) -> frozenset:
        return frozenset(c.members for c in self.clusters)

    def __len__(self):
        return len(self.clusters)


def build_clustering(topology: Topology, transmitters, order: Optional[Sequence[int]] = None
                     ) -> Clustering:
    """Split a transmitter set into its interfering clusters.

    Seeds a cluster with the first unassigned transmitter of ``order``
    (ascending ids by default) and keeps absorbing any remaining transmitter
    whose coverage meets the cluster's total coverage.
    """
    a = as_mask(transmitters)
    remaining = list(order) if order is not None else members(a)
    if sorted(remaining) != members(a):
        raise ValueError("order must be a permutation of the transmitter set")
    clusters = []
    while remaining:
        seed = remaining.pop(0)
        z = 1 << seed
        cover = topology.coverage[seed]
        grown = True
        while grown:
            grown = False
            for b in list(remaining):
                if topology.coverage[b] & cover:
                    z |= 1 << b
                    cover |= topology.coverage[b]
                    remaining.remove(b)
                    grown = True
        clusters.append(Cluster(z, cover, interference_mask(topology, z)))
    clusters.sort(key=lambda c: c.key)
    return Clustering(tuple(clusters))


@dataclass(frozen=True)
class EvaluatedCluster:
    cluster: Cluster
    weight: float
    combinations: Tuple[Tuple[int, Combination], ...]

    @property
    def key(self):
        return self.cluster.key

    def transmissions(self) -> List[Transmission]:
        return [Transmission(i, c.packets, c.targets) for i, c in self.combinations]


class ClusterScorer:
    """Scores clusters against one network state, memoising per-transmitter work."""

    def __init__(self, state: SideInformation, topology: Topology, erasure: ErasureModel,
                 weighting: Weighting = Weighting.DELAY_REDUCTION):
        self.state = state
        self.topology = topology
        self.erasure = erasure
        self.weighting = Weighting(weighting)
        self.combos = CombinationCache(state, erasure)
        self.wanting = state.wanting_mask()
        self._memo: Dict[int, EvaluatedCluster] = {}

    def cluster(self, z: int) -> Cluster:
        top = self.topology
        return Cluster(z, top.total_coverage_mask(z), interference_mask(top, z))

    def evaluate(self, cluster: Cluster) -> EvaluatedCluster:
        hit = self._memo.get(cluster.members_mask)
        if hit is not None:
            return hit
        wanting = self.wanting
        p = self.erasure.d2d_loss
        combos = []
        gain = 0.0
        for i in members(cluster.members_mask):
            zone = cluster.opportunity(self.topology, i)
            combo = self.combos(i, zone)
            combos.append((i, combo))
            gain += combo.value
            if self.weighting is Weighting.DELAY_REDUCTION:
                gain += float(sum(p[i, j] for j in members(zone & wanting)))
        if self.weighting is Weighting.COVERAGE_CREDIT:
            gain += (popcount(cluster.coverage_mask & wanting)
                     - popcount(cluster.members_mask & wanting)
                     - popcount(cluster.interference_mask & wanting))
        out = EvaluatedCluster(cluster, gain, tuple(combos))
        self._memo[cluster.members_mask] = out
        return out

    def evaluate_mask(self, z: int) -> EvaluatedCluster:
        hit = self._memo.get(z)
        return hit if hit is not None else self.evaluate(self.cluster(z))


def cluster_weight(state: SideInformation, topology: Topology, erasure: ErasureModel,
                   cluster, weighting: Weighting = Weighting.DELAY_REDUCTION) -> float:
    """Weight of one cluster as a cooperation-graph vertex.

    Each member sends its best combination over its opportunity zone
    relative to the cluster (its coverage minus the cluster and the
    cluster's interference zone).
    """
    if not isinstance(cluster, Cluster):
        cluster = Cluster.of(topology, cluster)
    elif not is_cohesive(topology, cluster.members_mask):
        raise ValueError("cluster is not cohesive")
    return ClusterScorer(state, topology, erasure, weighting).evaluate(cluster).weight


@dataclass(frozen=True)
class CooperationGraph:
    """Vertices are evaluated clusters, sorted by member tuple; edges join
    clusters whose total coverage zones are disjoint."""

    clusters: Tuple[EvaluatedCluster, ...]
    graph: WeightedGraph

    def __len__(self):
        return len(self.clusters)

    def cluster_keys(self) -> List[Tuple[int, ...]]:
        return [c.key for c in self.clusters]


def _assemble(evaluated: Iterable[EvaluatedCluster]) -> CooperationGraph:
    ordered = sorted(evaluated, key=lambda e: e.key)
    n = len(ordered)
    adj = [0] * n
    covers = [e.cluster.coverage_mask for e in ordered]
    for u in range(n):
        for v in range(u + 1, n):
            if not covers[u] & covers[v]:
                adj[u] |= 1 << v
                adj[v] |= 1 << u
    graph = WeightedGraph(tuple(e.weight for e in ordered), tuple(adj), tuple(ordered))
    return CooperationGraph(tuple(ordered), graph)


def singleton_graph(state: SideInformation, topology: Topology, erasure: ErasureModel,
                    weighting: Weighting = Weighting.DELAY_REDUCTION,
                    scorer: Optional[ClusterScorer] = None) -> CooperationGraph:
    """One vertex per device; cliques are exactly the interference-free transmitter sets."""
    scorer = scorer or ClusterScorer(state, topology, erasure, weighting)
    return _assemble(scorer.evaluate_mask(1 << i) for i in range(state.num_devices))


def build_full_graph(state: SideInformation, topology: Topology, erasure: ErasureModel,
                     weighting: Weighting = Weighting.DELAY_REDUCTION) -> CooperationGraph:
    """Every cohesive cluster as a vertex.  Exponential; reference use only."""
    m = state.num_devices
    if m > FULL_GRAPH_LIMIT:
        raise ValueError(f"full cooperation graph limited to {FULL_GRAPH_LIMIT} devices, got {m}")
    scorer = ClusterScorer(state, topology, erasure, weighting)
    evaluated = [scorer.evaluate_mask(z) for z in range(1, 1 << m) if is_cohesive(topology, z)]
    return _assemble(evaluated)


def build_pruned_graph(state: SideInformation, topology: Topology, erasure: ErasureModel,
                       weighting: Weighting = Weighting.DELAY_REDUCTION,
                       scorer: Optional[ClusterScorer] = None,
                       limit: Optional[int] = None) -> CooperationGraph:
    """Layered cluster generation.

    Layer 0 holds the single devices.  A cluster of layer k is grown by one
    device whose coverage meets the cluster's, and the grown cluster enters
    layer k+1 only if its weight is at least the weight of both parts.
    Generation stops at the first empty layer.

    The number of accepted clusters can grow exponentially on sparse
    topologies; ``limit`` bounds it and raises :class:`OverflowError`.
    """
    scorer = scorer or ClusterScorer(state, topology, erasure, weighting)
    cov = topology.coverage
    m = state.num_devices
    base = [scorer.evaluate_mask(1 << d) for d in range(m)]
    generated = {e.cluster.members_mask: e for e in base}
    layer = base
    while layer:
        nxt = {}
        for ev in layer:
            z = ev.cluster.members_mask
            zcov = ev.cluster.coverage_mask
            for d in range(m):
                if z >> d & 1 or not cov[d] & zcov:
                    continue
                merged = z | 1 << d
                if merged in nxt or merged in generated:
                    continue
                cand = scorer.evaluate_mask(merged)
                if cand.weight >= max(ev.weight, base[d].weight) - WEIGHT_TOL:
                    nxt[merged] = cand
        generated.update(nxt)
        if limit is not None and len(generated) > limit:
            raise OverflowError(f"pruned graph exceeded {limit} clusters")
        layer = list(nxt.values())
    return _assemble(generated.values())


@dataclass(frozen=True)
class SearchResult:
    schedule: Schedule
    weight: float
    nodes: int


def search_best_schedule(state: SideInformation, topology: Topology, erasure: ErasureModel,
                         weighting: Weighting = Weighting.DELAY_REDUCTION) -> SearchResult:
    """Exact branch and bound over transmitter sets.

    Finds a transmitter set of maximum total weight, which is the
    maximum-weight clique of the full cooperation graph, without building
    any graph.  Summed over the clusters of a transmitter set, both
    weightings split per transmitter into its combination value plus a
    credit for each wanting device in its opportunity zone: the erasure
    probability of the link under ``DELAY_REDUCTION``, a full unit under
    ``COVERAGE_CREDIT``.  Devices are branched on in order of decreasing stand-alone
    weight, including before excluding; only strict improvements replace
    the incumbent.  Two bounds prune the search: a transmitter's
    contribution never grows as more transmitters join, and every wanting
    device not yet reached can add at most its best link credit, plus the
    link's delivery probability when the remote end holds a packet it wants.  Devices with zero stand-alone weight are never used.
    """
    cov = topology.coverage
    m = state.num_devices
    wanting = state.wanting_mask()
    p = erasure.d2d_loss
    has = state.has
    if Weighting(weighting) is Weighting.DELAY_REDUCTION:
        credit = p
    else:
        credit = np.ones_like(p)
    combos = CombinationCache(state, erasure)
    memo: Dict[Tuple[int, int], float] = {}

    def contrib(i: int, zone: int) -> float:
        key = (i, zone & wanting)
        v = memo.get(key)
        if v is None:
            v = combos(i, key[1]).value + float(sum(credit[i, j] for j in members(key[1])))
            memo[key] = v
        return v

    single = [contrib(i, cov[i] & ~(1 << i)) for i in range(m)]
    order = sorted((i for i in range(m) if single[i] > WEIGHT_TOL), key=lambda i: (-single[i], i))
    n = len(order)
    # caps[k][j]: most that wanting device j can add through devices order[k:]
    caps = [[0.0] * m for _ in range(n + 1)]
    suffix = [0.0] * (n + 1)
    for k in range(n - 1, -1, -1):
        u = order[k]
        row = caps[k]
        row[:] = caps[k + 1]
        for j in members(cov[u] & wanting & ~(1 << u)):
            c = float(credit[u, j])
            if has[u] & ~has[j]:
                c += 1.0 - float(p[u, j])
            if c > row[j]:
                row[j] = c
        suffix[k] = suffix[k + 1] + single[u]

    best_w, best_a, nodes = 0.0, 0, 0

    def dfs(k: int, a: int, once: int, twice: int, w_a: float):
        nonlocal best_w, best_a, nodes
        nodes += 1
        if w_a > best_w + WEIGHT_TOL:
            best_w, best_a = w_a, a
        if k == n:
            return
        row = caps[k]
        reach = 0.0
        for j in members(wanting & ~(a | once | twice)):
            reach += row[j]
        if w_a + min(reach, suffix[k]) <= best_w + WEIGHT_TOL:
            return
        u = order[k]
        a2 = a | 1 << u
        twice2 = twice | (once & cov[u])
        once2 = (once | cov[u]) & ~twice2
        blocked = a2 | twice2
        w2 = sum(contrib(i, cov[i] & ~blocked) for i in members(a2))
        dfs(k + 1, a2, once2, twice2, w2)
        dfs(k + 1, a, once, twice, w_a)

    if wanting:
        dfs(0, 0, 0, 0, 0.0)
    blocked = best_a | interference_mask(topology, best_a)
    txs = []
    for i in members(best_a):
        c = combos(i, cov[i] & ~blocked)
        txs.append(Transmission(i, c.packets, c.targets))
    return SearchResult(Schedule(tuple(txs)), best_w, nodes)


def schedule_from_clusters(clusters: Iterable[EvaluatedCluster]) -> Schedule:
    txs = []
    for ev in clusters:
        txs.extend(ev.transmissions())
    return Schedule(tuple(txs))


def schedule_from_clique(coop: CooperationGraph, clique: Clique) -> Schedule:
    """Transmitter set and per-transmitter combinations represented by a clique."""
    if not coop.graph.is_clique(clique.members):
        raise ValueError("not a clique of this cooperation graph")
    return schedule_from_clusters(coop.clusters[v] for v in clique.members)


def best_schedule(coop: CooperationGraph) -> Tuple[Schedule, Clique]:
    clique = max_weight_clique(coop.graph)
    return schedule_from_clique(coop, clique), clique
