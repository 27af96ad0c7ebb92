import itertools
import random

import pytest

from cohbench.graphs import SignedCoherenceGraph

# 3-cycle with one consistent and two inconsistent pairs; the optimal cut
# separates the doubly-inconsistent vertex
TRIANGLE_EDGES = [("a", "b", 1.0), ("a", "c", -1.0), ("b", "c", -1.0)]

# 5-vertex worked example: consistent (a,e),(b,c),(b,e),(c,d),
# inconsistent (a,b),(b,d),(d,e)
PENTAGON_EDGES = [
    ("a", "e", 1.0), ("b", "c", 1.0), ("b", "e", 1.0), ("c", "d", 1.0),
    ("a", "b", -1.0), ("b", "d", -1.0), ("d", "e", -1.0),
]

# weighted consensus graph over 12 debate propositions; optimal cut parts
# {p1,p2,p3,p4,p6,p7,p9} / {p5,p8,p10,p11,p12} with coherence 1.4
DEBATE_EDGES = [
    ("p1", "p3", 1.0), ("p1", "p6", 0.6),
    ("p10", "p11", 0.6), ("p10", "p5", 0.6), ("p10", "p8", 0.5),
    ("p11", "p5", -0.4),
    ("p12", "p6", -0.4), ("p12", "p7", -1.0), ("p12", "p8", 1.0),
    ("p2", "p3", 0.3), ("p2", "p7", 1.0), ("p2", "p9", 0.6),
    ("p3", "p4", 1.0), ("p3", "p6", 0.5), ("p3", "p9", 0.4),
    ("p4", "p7", 0.1), ("p4", "p9", 0.4),
]


@pytest.fixture
def triangle():
    return SignedCoherenceGraph("abc", TRIANGLE_EDGES, benchmark=True)


@pytest.fixture
def pentagon():
    return SignedCoherenceGraph("abcde", PENTAGON_EDGES, benchmark=True)


@pytest.fixture
def debate():
    return SignedCoherenceGraph([f"p{i}" for i in range(1, 13)], DEBATE_EDGES)


def random_signed_graph(rng: random.Random, n: int, p: float,
                        weights=(-1.0, 1.0), labels=None) -> SignedCoherenceGraph:
    verts = labels or [chr(97 + i) for i in range(n)]
    edges = []
    for u, v in itertools.combinations(verts, 2):
        if rng.random() < p:
            edges.append((u, v, rng.choice(weights)))
    benchmark = set(weights) <= {-1.0, 1.0}
    return SignedCoherenceGraph(verts, edges, benchmark=benchmark)


def random_connected_signed_graph(rng: random.Random, n: int,
                                  p: float = 0.4) -> SignedCoherenceGraph:
    while True:
        g = random_signed_graph(rng, n, p)
        if g.is_connected():
            return g


def bfs_connected(graph: SignedCoherenceGraph) -> bool:
    """Independent connectivity oracle (plain breadth-first search)."""
    verts = list(graph.vertices)
    if not verts:
        return True
    seen = {verts[0]}
    queue = [verts[0]]
    while queue:
        current = queue.pop(0)
        for nbr in graph.neighbors(current):
            if nbr not in seen:
                seen.add(nbr)
                queue.append(nbr)
    return len(seen) == len(verts)
