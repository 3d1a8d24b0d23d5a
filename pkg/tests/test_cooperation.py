import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import scenarios, to_sets
from idnc_d2d._bits import mask_of
from idnc_d2d.clique import Clique, enumerate_cliques, max_weight_clique
from idnc_d2d.cooperation import (Cluster, ClusterScorer, Weighting, build_clustering,
                                  build_full_graph, build_pruned_graph, cluster_weight,
                                  is_cohesive, schedule_from_clique, schedule_from_clusters,
                                  search_best_schedule, singleton_graph)
from idnc_d2d.verify import random_scenario
from idnc_d2d.model import (ErasureModel, SideInformation, Topology, expected_delay,
                            validate_schedule)

LINE = Topology.from_edges(3, [(0, 1), (1, 2)])


def test_cluster_of_rejects_split_sets():
    path = Topology.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    with pytest.raises(ValueError):
        Cluster.of(path, {0, 4})
    with pytest.raises(ValueError):
        Cluster.of(path, set())
    c = Cluster.of(path, {0, 2})
    assert c.total_coverage == {0, 1, 2, 3} and c.intra_interference == {1}


@given(scenarios(max_devices=7), st.data())
def test_clustering_matches_union_find(sc, data):
    _, top, _ = sc
    A = data.draw(st.sets(st.integers(0, top.num_devices - 1)))
    _, _, cov, _ = to_sets(*sc)
    got = build_clustering(top, A)
    assert got.member_sets() == oracles.clusters(cov, A)
    assert got.transmitter_mask == mask_of(A)
    order = data.draw(st.permutations(sorted(A)))
    assert build_clustering(top, A, order).member_sets() == got.member_sets()
    for c in got.clusters:
        assert is_cohesive(top, c.members_mask)
    for a, b in itertools.combinations(got.clusters, 2):
        assert not a.coverage_mask & b.coverage_mask


@given(scenarios(max_devices=6), st.data())
def test_cohesion_matches_split_definition(sc, data):
    _, top, _ = sc
    Z = data.draw(st.sets(st.integers(0, top.num_devices - 1)))
    _, _, cov, _ = to_sets(*sc)
    assert is_cohesive(top, Z) == oracles.cohesive(cov, Z)


def test_line_weights(i1):
    state, top, e = i1
    dr = [cluster_weight(state, top, e, {i}) for i in range(3)]
    cc = [cluster_weight(state, top, e, {i}, Weighting.COVERAGE_CREDIT) for i in range(3)]
    assert dr == pytest.approx([1.0, 1.0, 1.0])
    assert cc == pytest.approx([1.9, 1.9, 1.9])


def test_line_full_graph_has_no_edges(i1):
    coop = build_full_graph(*i1)
    assert len(coop) == 7
    assert coop.graph.edges() == []
    assert max_weight_clique(coop.graph).members == (0,)


def test_full_graph_cliques_are_transmitter_sets():
    rng = np.random.default_rng(7)
    for _ in range(20):
        m = int(rng.integers(1, 7))
        state, top, e = random_scenario(rng, m, 3, float(rng.uniform(0.1, 0.9)))
        coop = build_full_graph(state, top, e)
        seen = set()
        for clique in enumerate_cliques(coop.graph):
            sched = schedule_from_clique(coop, Clique(clique, coop.graph.clique_weight(clique)))
            a = sched.transmitter_mask
            assert a not in seen
            seen.add(a)
            # the clustering of the union recovers exactly the clique's clusters
            assert build_clustering(top, a).member_sets() == {
                coop.clusters[v].cluster.members for v in clique}
        assert len(seen) == 2 ** m


@settings(max_examples=60)
@given(scenarios(max_devices=6, max_packets=3), st.sampled_from(list(Weighting)))
def test_pruned_full_and_search_agree(sc, weighting):
    full = max_weight_clique(build_full_graph(*sc, weighting).graph).weight
    pruned = max_weight_clique(build_pruned_graph(*sc, weighting).graph).weight
    found = search_best_schedule(*sc, weighting)
    assert pruned == pytest.approx(full, abs=1e-9)
    assert found.weight == pytest.approx(full, abs=1e-9)
    validate_schedule(sc[0], sc[1], found.schedule)


@settings(max_examples=40)
@given(scenarios(max_devices=5, max_packets=3))
def test_clique_weight_is_delay_reduction(sc):
    state, top, e = sc
    coop = build_full_graph(state, top, e)
    n_wanting = len(state.wanting())
    for clique in enumerate_cliques(coop.graph):
        sched = schedule_from_clusters(coop.clusters[v] for v in clique)
        delay = expected_delay(state, top, e, sched)
        assert coop.graph.clique_weight(clique) == pytest.approx(n_wanting - delay, abs=1e-9)


def _star_pair():
    # 0 and 1 are both hubs over leaves 2 and 3; leaf 4 hangs off 0 only
    top = Topology.from_edges(5, [(0, 2), (0, 3), (1, 2), (1, 3), (0, 4)])
    return top


def test_pruned_accepts_merge_that_does_not_lose_weight():
    top = _star_pair()
    # only leaf 4 wants anything, and only 0 reaches it
    state = SideInformation.from_sets(1, [{0}, {0}, {0}, {0}, set()])
    e = ErasureModel.uniform(5, 0.0, 0.0)
    scorer = ClusterScorer(state, top, e)
    assert scorer.evaluate_mask(0b11).weight == pytest.approx(scorer.evaluate_mask(0b01).weight)
    keys = build_pruned_graph(state, top, e).cluster_keys()
    assert (0, 1) in keys


def test_pruned_rejects_merge_that_loses_weight():
    top = _star_pair()
    # leaves 2 and 3 want packet 0; together 0 and 1 jam both leaves
    state = SideInformation.from_sets(1, [{0}, {0}, set(), set(), {0}])
    e = ErasureModel.uniform(5, 0.0, 0.0)
    scorer = ClusterScorer(state, top, e)
    assert scorer.evaluate_mask(0b11).weight < scorer.evaluate_mask(0b01).weight
    assert (0, 1) not in build_pruned_graph(state, top, e).cluster_keys()


def test_pruned_limit_raises():
    path = Topology.from_edges(6, [(i, i + 1) for i in range(5)])
    state = SideInformation.from_sets(1, [{0}] * 6)  # nobody wants: every merge ties
    e = ErasureModel.uniform(6, 0.1, 0.1)
    with pytest.raises(OverflowError):
        build_pruned_graph(state, path, e, limit=8)


def test_singleton_graph_edges_follow_coverage():
    path = Topology.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    state = SideInformation.from_sets(1, [{0}, set(), {0}, set(), {0}])
    coop = singleton_graph(state, path, ErasureModel.uniform(5, 0.0, 0.0))
    assert coop.graph.edges() == [(0, 3), (0, 4), (1, 4)]
    # 1 and 3 hold nothing; 4 can feed the wanting device 3
    assert coop.graph.weights == pytest.approx([1.0, 0.0, 2.0, 0.0, 1.0])
    # {0, 4} ties with {2} and wins the lexicographic tie-break
    assert max_weight_clique(coop.graph).members == (0, 4)


def test_full_graph_size_guard():
    m = 15
    top = Topology.complete(m)
    state = SideInformation.from_sets(1, [{0}] * m)
    with pytest.raises(ValueError):
        build_full_graph(state, top, ErasureModel.uniform(m, 0.1, 0.1))


def test_search_on_empty_wants():
    state = SideInformation.from_sets(1, [{0}] * 3)
    res = search_best_schedule(state, LINE, ErasureModel.uniform(3, 0.1, 0.1))
    assert res.weight == 0.0 and not res.schedule.transmissions
