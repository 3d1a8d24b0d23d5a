"""Vertex-weighted graphs and an exact maximum-weight clique solver.

Vertices are identified by their index ``0..n-1``; adjacency is kept as one
neighbour bitmask per vertex.  Ties between cliques of equal weight are
resolved towards the lexicographically smallest sorted member tuple, so
``(0,) < (0, 1) < (1,)``.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Iterable, Iterator, List, Optional, Sequence, Tuple

from ._bits import lowest, members

#: Two clique weights closer than this are treated as equal.
WEIGHT_TOL = 1e-9

BRUTE_FORCE_LIMIT = 25


@dataclass(frozen=True)
class WeightedGraph:
    weights: Tuple[float, ...]
    adjacency: Tuple[int, ...]
    payloads: Tuple[Any, ...] = field(default=(), compare=False)

    def __post_init__(self):
        n = len(self.weights)
        if len(self.adjacency) != n:
            raise ValueError("adjacency and weights differ in length")
        if self.payloads and len(self.payloads) != n:
            raise ValueError("payloads and weights differ in length")
        full = (1 << n) - 1
        for v, nb in enumerate(self.adjacency):
            if nb & ~full:
                raise ValueError(f"vertex {v} has a neighbour out of range")
            if nb >> v & 1:
                raise ValueError(f"self loop at vertex {v}")
            for u in members(nb):
                if not self.adjacency[u] >> v & 1:
                    raise ValueError(f"edge ({v}, {u}) is not symmetric")

    @classmethod
    def from_edges(cls, weights: Sequence[float], edges: Iterable[Tuple[int, int]],
                   payloads: Sequence[Any] = ()) -> "WeightedGraph":
        adj = [0] * len(weights)
        for u, v in edges:
            if u == v:
                raise ValueError(f"self loop at vertex {u}")
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return cls(tuple(float(w) for w in weights), tuple(adj), tuple(payloads))

    @property
    def num_vertices(self) -> int:
        return len(self.weights)

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u] >> v & 1)

    def edges(self) -> List[Tuple[int, int]]:
        return [(u, v) for u in range(self.num_vertices)
                for v in members(self.adjacency[u]) if u < v]

    def is_clique(self, vertices: Iterable[int]) -> bool:
        vs = list(vertices)
        return all(self.has_edge(u, v) for u, v in combinations(vs, 2))

    def clique_weight(self, vertices: Iterable[int]) -> float:
        return sum(self.weights[v] for v in vertices)

    def to_edge_list(self) -> str:
        """Plain-text dump: one ``v <id> <weight>`` line per vertex, then ``e <u> <v>``."""
        lines = [f"# {self.num_vertices} vertices, {len(self.edges())} edges"]
        lines += [f"v {v} {w!r}" for v, w in enumerate(self.weights)]
        lines += [f"e {u} {v}" for u, v in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "WeightedGraph":
        weights = {}
        edges = []
        for line in text.splitlines():
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                weights[int(parts[1])] = float(parts[2])
            elif parts[0] == "e":
                edges.append((int(parts[1]), int(parts[2])))
            else:
                raise ValueError(f"unrecognised line: {line!r}")
        if sorted(weights) != list(range(len(weights))):
            raise ValueError("vertex ids must be 0..n-1")
        return cls.from_edges([weights[v] for v in range(len(weights))], edges)


@dataclass(frozen=True)
class Clique:
    members: Tuple[int, ...]
    weight: float

    def __len__(self):
        return len(self.members)


def max_weight_clique(graph: WeightedGraph) -> Clique:
    """Exact maximum-weight clique by depth-first branch and bound.

    The search visits cliques in lexicographic order and only accepts strict
    improvements, which yields the lexicographically smallest optimum.  The
    bound is the sum, over a greedy colouring of the candidate set, of the
    heaviest vertex in each colour class.  Negative vertices are dropped up
    front; the empty clique (weight 0) is returned if nothing beats it.
    """
    w = graph.weights
    adj = graph.adjacency
    usable = 0
    for v, wv in enumerate(w):
        if wv >= 0:
            usable |= 1 << v

    best_w = 0.0
    best: Tuple[int, ...] = ()

    def colour_bound(p: int) -> float:
        total = 0.0
        while p:
            q = p
            top = 0.0
            while q:
                v = lowest(q)
                if w[v] > top:
                    top = w[v]
                q &= ~adj[v] & ~(1 << v)
                p &= ~(1 << v)
            total += top
        return total

    def expand(r: List[int], wr: float, p: int) -> None:
        nonlocal best_w, best
        while p:
            if wr + colour_bound(p) <= best_w + WEIGHT_TOL:
                return
            v = lowest(p)
            p &= ~(1 << v)
            r.append(v)
            wv = wr + w[v]
            if wv > best_w + WEIGHT_TOL:
                best_w, best = wv, tuple(r)
            expand(r, wv, p & adj[v])
            r.pop()

    expand([], 0.0, usable)
    return Clique(best, graph.clique_weight(best))


def enumerate_cliques(graph: WeightedGraph) -> Iterator[Tuple[int, ...]]:
    """Yield every clique (the empty one first) in lexicographic order."""
    adj = graph.adjacency

    def walk(r, p):
        yield tuple(r)
        while p:
            v = lowest(p)
            p &= ~(1 << v)
            r.append(v)
            yield from walk(r, p & adj[v])
            r.pop()

    yield from walk([], (1 << graph.num_vertices) - 1)


def brute_force_clique(graph: WeightedGraph) -> Clique:
    """Reference solver: test every vertex subset.

    Uses the same acceptance rule as :func:`max_weight_clique` (scan in
    lexicographic order, keep strict improvements) but shares no search code.
    """
    n = graph.num_vertices
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} vertices, got {n}")
    cliques = []
    for subset in range(1 << n):
        vs = tuple(v for v in range(n) if subset >> v & 1)
        if graph.is_clique(vs):
            cliques.append(vs)
    cliques.sort()
    best_w, best = 0.0, ()
    for vs in cliques:
        cw = graph.clique_weight(vs)
        if cw > best_w + WEIGHT_TOL:
            best_w, best = cw, vs
    return Clique(best, graph.clique_weight(best))


def random_graph(n: int, density: float, rng, low: float = -1.0,
                 high: float = 5.0, payloads: Optional[Sequence[Any]] = None) -> WeightedGraph:
    """Erdos-Renyi graph with uniform vertex weights, handy for tests."""
    weights = rng.uniform(low, high, size=n)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < density]
    return WeightedGraph.from_edges(weights.tolist(), edges, payloads or ())
