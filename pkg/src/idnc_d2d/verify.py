"""Self-checks on bundled fixtures and seeded random instances.

Each check returns a :class:`CheckResult`; :func:`run_verification` prints
one PASS/FAIL line per check.
"""

import itertools
import json
import sys
from dataclasses import dataclass
from importlib import resources
from typing import Callable, List, Tuple

import numpy as np

from ._bits import members
from .clique import brute_force_clique, enumerate_cliques, max_weight_clique, random_graph
from .cooperation import (Weighting, build_clustering, build_full_graph, build_pruned_graph,
                          schedule_from_clusters, search_best_schedule)
from .model import (ErasureModel, SideInformation, Topology, device_partition_check,
                    expected_delay, interference_mask, opportunity_mask, scenario_from_dict)
from .schedulers import schedule_oracle, schedule_pc_optimal

TOL = 1e-9

Scenario = Tuple[SideInformation, Topology, ErasureModel]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    cases: int
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{tag} {self.name}: {self.cases} cases{extra}"


def random_topology(rng: np.random.Generator, m: int, c: float) -> Topology:
    while True:
        links = np.triu(rng.random((m, m)) < c, 1)
        try:
            return Topology.from_matrix(links | links.T)
        except ValueError:
            continue


def random_scenario(rng: np.random.Generator, m: int, n: int, c: float,
                    max_loss: float = 0.5, miss: float = 0.4) -> Scenario:
    """Connected topology with link probability ``c``, each packet missed with
    probability ``miss`` (but held somewhere), D2D erasures uniform on [0, max_loss)."""
    topology = random_topology(rng, m, c)
    while True:
        lost = rng.random((m, n)) < miss
        if (~lost).any(axis=0).all():
            break
    d2d = rng.uniform(0.0, max_loss, (m, m))
    return SideInformation.from_feedback(lost), topology, ErasureModel(d2d, np.full(m, 0.2))


def bundled_fixtures() -> List[Tuple[str, Scenario]]:
    text = resources.files("idnc_d2d").joinpath("data/fixtures.json").read_text()
    return [(doc["name"], scenario_from_dict(doc["scenario"])) for doc in json.loads(text)]


def random_transmitters(rng: np.random.Generator, m: int) -> int:
    return int(sum(1 << i for i in range(m) if rng.random() < rng.uniform(0.1, 0.9)))


# -- checks --------------------------------------------------------------------

def check_oracle(scenarios: List[Scenario]) -> CheckResult:
    """The optimal policy (both methods) reaches the exhaustive minimum expected delay."""
    worst = 0.0
    for state, topology, erasure in scenarios:
        best = expected_delay(state, topology, erasure, schedule_oracle(state, topology, erasure))
        for method in ("search", "pruned"):
            got = expected_delay(state, topology, erasure,
                                 schedule_pc_optimal(state, topology, erasure, method=method))
            worst = max(worst, abs(got - best))
    return CheckResult("optimal policy matches exhaustive oracle", worst <= TOL, len(scenarios),
                       f"max deviation {worst:.2e}")


def check_pruned_graph(scenarios: List[Scenario]) -> CheckResult:
    """Layered pruned graph and search reach the max clique weight of the full graph."""
    worst = 0.0
    for state, topology, erasure in scenarios:
        for w in Weighting:
            full = max_weight_clique(build_full_graph(state, topology, erasure, w).graph).weight
            pruned = max_weight_clique(build_pruned_graph(state, topology, erasure, w).graph).weight
            found = search_best_schedule(state, topology, erasure, w).weight
            worst = max(worst, abs(full - pruned), abs(full - found))
    return CheckResult("pruned graph and search match full graph", worst <= TOL,
                       2 * len(scenarios), f"max deviation {worst:.2e}")


def check_objective_bridge(scenarios: List[Scenario]) -> CheckResult:
    """Every clique's weight equals wanting devices minus the expected delay of its schedule."""
    worst, cases = 0.0, 0
    for state, topology, erasure in scenarios:
        coop = build_full_graph(state, topology, erasure)
        n_wanting = len(members(state.wanting_mask()))
        for clique in enumerate_cliques(coop.graph):
            weight = coop.graph.clique_weight(clique)
            sched = schedule_from_clusters(coop.clusters[v] for v in clique)
            delay = expected_delay(state, topology, erasure, sched)
            worst = max(worst, abs(weight - (n_wanting - delay)))
            cases += 1
    return CheckResult("clique weight equals delay reduction", worst <= TOL, cases,
                       f"max deviation {worst:.2e}")


def check_clique_solver(rng: np.random.Generator, count: int) -> CheckResult:
    bad = 0
    for _ in range(count):
        g = random_graph(int(rng.integers(0, 13)), float(rng.uniform(0.1, 0.9)), rng)
        a, b = max_weight_clique(g), brute_force_clique(g)
        if abs(a.weight - b.weight) > TOL or a.members != b.members:
            bad += 1
    return CheckResult("clique solver matches brute force", bad == 0, count, f"{bad} mismatches")


def check_partition(rng: np.random.Generator, count: int) -> CheckResult:
    """Zones, transmitters, interference and shadow sets split the network.

    Without interference each opportunity zone is the coverage minus the
    transmitters, and minus the transmitter alone when coverages are disjoint.
    """
    bad = 0
    for _ in range(count):
        m = int(rng.integers(1, 11))
        state, topology, _ = random_scenario(rng, m, int(rng.integers(1, 6)),
                                             float(rng.uniform(0.1, 0.9)))
        a = random_transmitters(rng, m)
        if not device_partition_check(state, topology, a):
            bad += 1
        if interference_mask(topology, a) == 0:
            disjoint = topology.total_coverage_mask(a).bit_count() == sum(
                topology.coverage[i].bit_count() for i in members(a))
            for i in members(a):
                zone = opportunity_mask(topology, a, i)
                if zone != topology.coverage[i] & ~a:
                    bad += 1
                if disjoint and zone != topology.coverage[i] & ~(1 << i):
                    bad += 1
    return CheckResult("partition and interference-free zones", bad == 0, count,
                       f"{bad} violations")


def check_clustering_order(rng: np.random.Generator, count: int) -> CheckResult:
    bad = 0
    for _ in range(count):
        m = int(rng.integers(1, 9))
        topology = random_topology(rng, m, float(rng.uniform(0.1, 0.9)))
        a = random_transmitters(rng, m)
        ref = build_clustering(topology, a).member_sets()
        for order in itertools.permutations(members(a)):
            if build_clustering(topology, a, order).member_sets() != ref:
                bad += 1
                break
    return CheckResult("clustering independent of seed order", bad == 0, count,
                       f"{bad} violations")


def run_verification(seed: int = 0, quick: bool = False, out=None) -> bool:
    out = out or sys.stdout
    rng = np.random.default_rng(seed)
    scale = 1 if quick else 4
    fixtures = [s for _, s in bundled_fixtures()]
    small = fixtures + [random_scenario(rng, int(rng.integers(1, 9)), int(rng.integers(1, 5)),
                                        float(rng.choice([0.2, 0.5, 0.8])))
                        for _ in range(25 * scale)]
    medium = [random_scenario(rng, int(rng.integers(2, 11)), int(rng.integers(1, 6)),
                              float(rng.choice([0.1, 0.3, 0.5, 0.8])))
              for _ in range(10 * scale)]
    tiny = fixtures + [random_scenario(rng, int(rng.integers(1, 6)), int(rng.integers(1, 4)),
                                       float(rng.choice([0.2, 0.5, 0.8])))
                       for _ in range(5 * scale)]
    checks: List[Callable[[], CheckResult]] = [
        lambda: check_oracle(small),
        lambda: check_pruned_graph(medium),
        lambda: check_objective_bridge(tiny),
        lambda: check_clique_solver(rng, 50 * scale),
        lambda: check_partition(rng, 100 * scale),
        lambda: check_clustering_order(rng, 20 * scale),
    ]
    ok = True
    for check in checks:
        res = check()
        print(res.line(), file=out, flush=True)
        ok &= res.passed
    print("all checks passed" if ok else "some checks FAILED", file=out)
    return ok
