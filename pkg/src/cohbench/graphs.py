"""Signed coherence graphs: data model, coherence objective, L1 distance, medians.

A signed coherence graph is an undirected graph over named propositions whose
edge weights in [-1, 1] encode pairwise consistency (+) or inconsistency (-).
Absent edges count as weight 0 everywhere (distances, medians, labels).
"""

from __future__ import annotations

import itertools
import json
import random
import statistics
from dataclasses import dataclass

from .errors import InputError


def vertex_pair(u: str, v: str) -> tuple[str, str]:
    """Canonical unordered pair: endpoints sorted lexicographically."""
    if u == v:
        raise InputError(f"self-loop on vertex {u!r}")
    return (u, v) if u < v else (v, u)


class SignedCoherenceGraph:
    """Immutable undirected graph with signed edge weights in [-1, 1].

    ``benchmark=True`` additionally restricts weights to exactly +1 or -1,
    the regime used for synthetic problem generation.
    """

    __slots__ = ("_vertices", "_weights", "_adj", "_sorted_edges", "benchmark")

    def __init__(self, vertices, edges=(), *, benchmark=False):
        verts = tuple(vertices)
        if len(set(verts)) != len(verts):
            raise InputError("duplicate vertex labels")
        vset = set(verts)
        weights: dict[tuple[str, str], float] = {}
        adj: dict[str, dict[str, float]] = {v: {} for v in verts}
        for u, v, w in edges:
            if u not in vset or v not in vset:
                raise InputError(f"edge endpoint not declared: ({u!r}, {v!r})")
            pair = vertex_pair(u, v)
            if pair in weights:
                raise InputError(f"duplicate edge {pair}")
            w = float(w)
            if not -1.0 <= w <= 1.0:
                raise InputError(f"weight {w} outside [-1, 1] on {pair}")
            if benchmark and w not in (-1.0, 1.0):
                raise InputError(f"benchmark graphs need weights in {{-1, +1}}, got {w}")
            weights[pair] = w
            adj[pair[0]][pair[1]] = w
            adj[pair[1]][pair[0]] = w
        self._vertices = verts
        self._weights = weights
        self._adj = adj
        self._sorted_edges = tuple(
            (u, v, weights[(u, v)]) for u, v in sorted(weights))
        self.benchmark = bool(benchmark)

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def vertex_set(self) -> frozenset[str]:
        return frozenset(self._vertices)

    def num_edges(self) -> int:
        return len(self._weights)

    def density(self) -> float:
        n = len(self._vertices)
        pairs = n * (n - 1) // 2
        return len(self._weights) / pairs if pairs else 0.0

    def has_edge(self, u: str, v: str) -> bool:
        return vertex_pair(u, v) in self._weights

    def weight(self, u: str, v: str) -> float:
        """Weight of the edge {u, v}, or 0.0 if absent."""
        return self._weights.get(vertex_pair(u, v), 0.0)

    def neighbors(self, v: str) -> dict[str, float]:
        return dict(self._adj[v])

    def edges(self) -> tuple[tuple[str, str, float], ...]:
        """All edges as (u, v, w) with u < v, sorted lexicographically."""
        return self._sorted_edges

    def edge_pairs(self) -> list[tuple[str, str]]:
        return [(u, v) for u, v, _ in self._sorted_edges]

    def is_connected(self) -> bool:
        if not self._vertices:
            return True
        seen = {self._vertices[0]}
        stack = [self._vertices[0]]
        while stack:
            for u in self._adj[stack.pop()]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == len(self._vertices)

    def __eq__(self, other):
        if not isinstance(other, SignedCoherenceGraph):
            return NotImplemented
        return (sorted(self._vertices) == sorted(other._vertices)
                and self._weights == other._weights)

    def __hash__(self):
        return hash((tuple(sorted(self._vertices)),
                     tuple(sorted(self._weights.items()))))

    def __repr__(self):
        return (f"SignedCoherenceGraph({len(self._vertices)} vertices, "
                f"{len(self._weights)} edges)")

    def to_json_dict(self) -> dict:
        return {
            "vertices": sorted(self._vertices),
            "edges": [[u, v, w] for u, v, w in self.edges()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, data: dict, *, benchmark=False) -> "SignedCoherenceGraph":
        return cls(data["vertices"],
                   [(u, v, w) for u, v, w in data.get("edges", [])],
                   benchmark=benchmark)

    @classmethod
    def from_json(cls, text: str, *, benchmark=False) -> "SignedCoherenceGraph":
        return cls.from_json_dict(json.loads(text), benchmark=benchmark)


@dataclass(frozen=True)
class Cut:
    """A bipartition {members, complement} with its coherence value.

    ``accepted`` is the part labeled as estimated-true (either ``members``,
    its complement, or None when unassigned).
    """

    members: frozenset[str]
    coherence: float
    accepted: frozenset[str] | None = None

    def to_json_dict(self) -> dict:
        out = {
            "part": sorted(self.members),
            "coherence": self.coherence,
        }
        if self.accepted is not None:
            out["accepted"] = sorted(self.accepted)
        return out


def coherence(graph: SignedCoherenceGraph, part) -> float:
    """Negative sum of the weights of edges crossing {part, complement}."""
    members = frozenset(part)
    unknown = members - graph.vertex_set
    if unknown:
        raise InputError(f"unknown vertex labels in part: {sorted(unknown)}")
    total = 0.0
    for u, v, w in graph.edges():
        if (u in members) != (v in members):
            total += w
    return -total + 0.0  # avoid -0.0


def l1_distance(g1: SignedCoherenceGraph, g2: SignedCoherenceGraph,
                normalized: bool = False) -> float:
    """Entrywise L1 distance between weighted adjacencies; absent edges are 0.

    Coincides with a graph edit distance in which edge insertion/deletion
    costs |w| and substitution costs |w1 - w2|. The normalized form divides
    by the number of vertex pairs.
    """
    if g1.vertex_set != g2.vertex_set:
        raise InputError("graphs must share the same vertex set")
    pairs = set(g1.edge_pairs()) | set(g2.edge_pairs())
    total = sum(abs(g1.weight(u, v) - g2.weight(u, v)) for u, v in pairs)
    if normalized:
        n = len(g1.vertices)
        total /= n * (n - 1) / 2
    return total


def median_consensus(graphs) -> SignedCoherenceGraph:
    """Per-pair entrywise median of edge weights across several graphs.

    Even-length inputs take the midpoint of the two central values. Pairs
    whose median is 0 yield no edge in the consensus graph.
    """
    graphs = list(graphs)
    if not graphs:
        raise InputError("median of an empty graph list")
    vset = graphs[0].vertex_set
    for g in graphs[1:]:
        if g.vertex_set != vset:
            raise InputError("graphs must share the same vertex set")
    pairs = set()
    for g in graphs:
        pairs.update(g.edge_pairs())
    edges = []
    for u, v in sorted(pairs):
        med = statistics.median(g.weight(u, v) for g in graphs)
        if med != 0.0:
            edges.append((u, v, med))
    return SignedCoherenceGraph(sorted(vset), edges)


def convergence_curve(graphs, subsample_sizes, trials_per_size: int, seed,
                      normalized: bool = False):
    """Distances between subsample medians and the full-sample median.

    For each n in ``subsample_sizes`` draws ``trials_per_size`` random
    n-subsets of ``graphs`` and records the L1 distance from the subset's
    median consensus to the consensus of all N graphs. Returns a list of
    (n, [distance, ...]) rows for downstream plotting.
    """
    graphs = list(graphs)
    n_total = len(graphs)
    if trials_per_size < 1:
        raise InputError("trials_per_size must be >= 1")
    full = median_consensus(graphs)
    rng = random.Random(seed)
    rows = []
    for n in subsample_sizes:
        if not 1 <= n <= n_total:
            raise InputError(f"subsample size {n} not in [1, {n_total}]")
        distances = []
        for _ in range(trials_per_size):
            subset = rng.sample(graphs, n)
            distances.append(l1_distance(median_consensus(subset), full,
                                         normalized=normalized))
        rows.append((n, distances))
    return rows


def all_vertex_pairs(vertices):
    """Sorted unordered pairs over a vertex collection."""
    return list(itertools.combinations(sorted(vertices), 2))
