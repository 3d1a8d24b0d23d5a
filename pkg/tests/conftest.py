import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from idnc_d2d.model import ErasureModel, SideInformation, Topology

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record and print one pass/fail line per acceptance criterion."""
    def _report(criterion: str, passed: bool, detail: str):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
    return _report


def line3(p=0.1):
    """Devices 0-1-2 on a line, two packets: 0 holds both, 1 holds packet 0,
    2 holds packet 1."""
    state = SideInformation.from_sets(2, [{0, 1}, {0}, {1}])
    topology = Topology.from_edges(3, [(0, 1), (1, 2)])
    return state, topology, ErasureModel.uniform(3, p, 0.2)


@pytest.fixture
def i1():
    return line3()


def to_sets(state, topology, erasure):
    """Plain-set view for the reference implementations in ``oracles``."""
    has = [set(state.has_set(i)) for i in range(state.num_devices)]
    cov = [set(topology.coverage_set(i)) for i in range(topology.num_devices)]
    return has, state.num_packets, cov, erasure.d2d_loss.tolist()


@st.composite
def scenarios(draw, max_devices=6, max_packets=3, lossless=False):
    """Connected topology, valid side information and a random erasure matrix."""
    m = draw(st.integers(1, max_devices))
    n = draw(st.integers(1, max_packets))
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    links = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = [pr for pr, on in zip(pairs, links) if on]
    # chain the components so the network is connected
    topo = Topology.from_edges(m, edges) if _connected(m, edges) else Topology.from_edges(
        m, edges + [(i, i + 1) for i in range(m - 1)])
    has = [set(draw(st.sets(st.integers(0, n - 1), max_size=n))) for _ in range(m)]
    for pkt in range(n):
        if not any(pkt in h for h in has):
            has[draw(st.integers(0, m - 1))].add(pkt)
    if lossless:
        d2d = np.zeros((m, m))
    else:
        vals = draw(st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.9]),
                             min_size=m * m, max_size=m * m))
        d2d = np.array(vals).reshape(m, m)
    return SideInformation.from_sets(n, has), topo, ErasureModel(d2d, np.full(m, 0.2))


def _connected(m, edges):
    seen, stack = {0}, [0]
    nbrs = {i: set() for i in range(m)}
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    while stack:
        for b in nbrs[stack.pop()] - seen:
            seen.add(b)
            stack.append(b)
    return len(seen) == m
