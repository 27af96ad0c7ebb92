"""Clique edge covers and star forest decompositions.

These feed proposition synthesis: one variable per clique in a cover, one
property per star forest of a clique's negative edges. Graphs here are small
(at most a few dozen vertices), so the techniques are deliberately pedestrian:
pivoting Bron-Kerbosch enumeration, exact set cover by branch and bound, and
uniform random edge partitions for the brute-force decomposition.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import InputError
from .graphs import SignedCoherenceGraph, vertex_pair

Edge = tuple[str, str]


# ---------------------------------------------------------------------------
# clique enumeration

def maximal_cliques(graph: SignedCoherenceGraph) -> list[tuple[str, ...]]:
    """All maximal cliques via Bron-Kerbosch with pivoting.

    Returns sorted vertex tuples, ordered lexicographically for determinism.
    Isolated vertices count as maximal 1-cliques.
    """
    adj = {v: set(graph.neighbors(v)) for v in graph.vertices}
    out: list[tuple[str, ...]] = []

    def expand(clique: list[str], cand: set[str], excl: set[str]):
        if not cand and not excl:
            out.append(tuple(sorted(clique)))
            return
        pivot = max(sorted(cand | excl), key=lambda u: len(cand & adj[u]))
        for v in sorted(cand - adj[pivot]):
            expand(clique + [v], cand & adj[v], excl & adj[v])
            cand = cand - {v}
            excl = excl | {v}

    expand([], set(graph.vertices), set())
    return sorted(out)


def maximum_clique(graph: SignedCoherenceGraph) -> tuple[str, ...]:
    """A maximum clique; ties broken by lexicographically smallest tuple.

    Exact: the maximum clique is always among the maximal cliques, and at
    these sizes full enumeration is cheap.
    """
    cliques = maximal_cliques(graph)
    if not cliques:
        raise InputError("graph has no vertices")
    best = max(len(c) for c in cliques)
    return min(c for c in cliques if len(c) == best)


def _clique_edges(clique) -> frozenset[Edge]:
    verts = sorted(clique)
    return frozenset((verts[i], verts[j])
                     for i in range(len(verts)) for j in range(i + 1, len(verts)))


# ---------------------------------------------------------------------------
# clique edge covers

@dataclass(frozen=True)
class CliqueEdgeCover:
    """A set of cliques whose edges jointly cover the graph's edge set."""

    cliques: tuple[tuple[str, ...], ...]
    method: str

    def edge_sets(self) -> list[frozenset[Edge]]:
        return [_clique_edges(c) for c in self.cliques]

    def covered_edges(self) -> frozenset[Edge]:
        covered: set[Edge] = set()
        for es in self.edge_sets():
            covered |= es
        return frozenset(covered)


def cover_degenerate(graph: SignedCoherenceGraph) -> CliqueEdgeCover:
    """One 2-clique per edge; trivially a partition."""
    cliques = tuple((u, v) for u, v in graph.edge_pairs())
    return CliqueEdgeCover(cliques, "degenerate")


def cover_partition(graph: SignedCoherenceGraph) -> CliqueEdgeCover:
    """Greedy clique edge partition: peel off a maximum clique of the residual
    graph until no edges remain."""
    residual = {(u, v): w for u, v, w in graph.edges()}
    verts = sorted(graph.vertices)
    cliques: list[tuple[str, ...]] = []
    while residual:
        sub = SignedCoherenceGraph(verts, [(u, v, w) for (u, v), w in residual.items()])
        clique = maximum_clique(sub)
        if len(clique) < 2:
            # residual still has edges, so a 2-clique always exists
            raise AssertionError("maximum clique degenerated below an edge")
        cliques.append(clique)
        for e in _clique_edges(clique):
            residual.pop(e, None)
    return CliqueEdgeCover(tuple(cliques), "partition")


def cover_percolation(graph: SignedCoherenceGraph) -> CliqueEdgeCover:
    """Minimum-cardinality clique edge cover from the maximal cliques.

    Enumerates maximal cliques, solves set cover over the edge universe
    (exact branch and bound up to 64 candidates, greedy beyond), then shrinks
    each selected clique to the vertices its residual contribution spans so
    sub-cliques of maximal cliques surface in the output.
    """
    universe = frozenset(graph.edge_pairs())
    if not universe:
        return CliqueEdgeCover((), "percolation")
    candidates = [c for c in maximal_cliques(graph) if len(c) >= 2]
    edge_sets = [_clique_edges(c) & universe for c in candidates]
    if len(candidates) <= 64:
        chosen = _set_cover_exact(universe, edge_sets)
    else:
        chosen = _set_cover_greedy(universe, edge_sets)
    picked = [candidates[i] for i in chosen]
    # residual shrink: largest cliques first, each keeps only the vertices
    # spanned by the edges it is first to cover
    picked.sort(key=lambda c: (-len(c), c))
    uncovered = set(universe)
    final: list[tuple[str, ...]] = []
    for clique in picked:
        mine = _clique_edges(clique) & uncovered
        if not mine:
            continue
        spanned = sorted({v for e in mine for v in e})
        final.append(tuple(spanned))
        uncovered -= _clique_edges(tuple(spanned))
    return CliqueEdgeCover(tuple(final), "percolation")


def _set_cover_greedy(universe, edge_sets) -> list[int]:
    uncovered = set(universe)
    order = sorted(range(len(edge_sets)), key=lambda i: (-len(edge_sets[i]), i))
    chosen = []
    while uncovered:
        best = max(order, key=lambda i: (len(edge_sets[i] & uncovered), -i))
        if not edge_sets[best] & uncovered:
            raise AssertionError("candidates do not cover the edge universe")
        chosen.append(best)
        uncovered -= edge_sets[best]
    return chosen


def _set_cover_exact(universe, edge_sets) -> list[int]:
    """Branch and bound minimum set cover; deterministic exploration order."""
    best = _set_cover_greedy(universe, edge_sets)
    max_size = max((len(s) for s in edge_sets), default=1)

    covers_of: dict[Edge, list[int]] = {e: [] for e in universe}
    for i, s in enumerate(edge_sets):
        for e in s:
            covers_of[e].append(i)

    def dfs(uncovered: frozenset[Edge], chosen: list[int]):
        nonlocal best
        if not uncovered:
            if len(chosen) < len(best):
                best = list(chosen)
            return
        if len(chosen) + math.ceil(len(uncovered) / max_size) >= len(best):
            return
        # branch on the hardest edge: fewest remaining candidates
        target = min(sorted(uncovered), key=lambda e: len(covers_of[e]))
        for i in sorted(covers_of[target],
                        key=lambda i: (-len(edge_sets[i] & uncovered), i)):
            dfs(uncovered - edge_sets[i], chosen + [i])

    dfs(frozenset(universe), [])
    return best


# ---------------------------------------------------------------------------
# star forests

def is_star_forest(edges) -> bool:
    """True iff the edge set has no triangle and no simple 3-edge path.

    Equivalently, every connected component has at most one vertex of degree
    greater than 1. Both characterizations are evaluated and cross-checked.
    """
    edge_list = [vertex_pair(u, v) for u, v in edges]
    adj: dict[str, set[str]] = {}
    for u, v in edge_list:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)

    # characterization 1: forbidden subgraphs
    has_bad = False
    for u, v in edge_list:
        if adj[u] & adj[v]:
            has_bad = True  # triangle
            break
        for x in adj[u] - {v}:
            if adj[v] - {u, x}:
                has_bad = True  # simple path of edge length 3
                break
        if has_bad:
            break

    # characterization 2: one center per component
    centerless = True
    seen: set[str] = set()
    for start in sorted(adj):
        if start in seen:
            continue
        comp, stack = {start}, [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        if sum(1 for v in comp if len(adj[v]) > 1) > 1:
            centerless = False

    if (not has_bad) != centerless:
        raise AssertionError("star forest characterizations disagree")
    return not has_bad


@dataclass(frozen=True)
class Star:
    root: str
    leaves: tuple[str, ...]

    def edges(self) -> tuple[Edge, ...]:
        return tuple(vertex_pair(self.root, leaf) for leaf in self.leaves)


@dataclass(frozen=True)
class StarForestDecomposition:
    """A partition of an edge set into star forests, with per-star roots."""

    forests: tuple[tuple[Edge, ...], ...]
    stars: tuple[tuple[Star, ...], ...] = field(repr=False)
    method: str = "greedy"
    fell_back: bool = False

    def size(self) -> int:
        return len(self.forests)


def _stars_of_forest(edge_set) -> tuple[Star, ...]:
    """Split a validated star forest into stars, fixing the root of each."""
    adj: dict[str, set[str]] = {}
    for u, v in edge_set:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    stars = []
    seen: set[str] = set()
    for start in sorted(adj):
        if start in seen:
            continue
        comp, stack = {start}, [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        centers = [v for v in sorted(comp) if len(adj[v]) > 1]
        root = centers[0] if centers else min(comp)
        stars.append(Star(root, tuple(sorted(comp - {root}))))
    return tuple(stars)


def forest_is_admissible(forest_edges, universe) -> bool:
    """A star forest block is usable for property assignment only when every
    cross-star root-leaf pair is itself an edge of the set being decomposed.

    Stars within one forest share a property symbol (root asserted, leaves
    negated), so a root of one star and a leaf of another read as a conflict;
    that is only faithful when the pair really is one of the decomposed
    (conflicting) edges. Single-star forests are trivially admissible.
    """
    if not is_star_forest(forest_edges):
        return False
    stars = _stars_of_forest(forest_edges)
    for i, s1 in enumerate(stars):
        for s2 in stars[i + 1:]:
            for root, other in ((s1.root, s2), (s2.root, s1)):
                for leaf in other.leaves:
                    if vertex_pair(root, leaf) not in universe:
                        return False
    return True


def _build_decomposition(forest_sets, method, universe, fell_back=False) -> StarForestDecomposition:
    forests = []
    stars = []
    for fs in forest_sets:
        if not forest_is_admissible(fs, universe):
            raise AssertionError(f"{method} produced an inadmissible block")
        forests.append(tuple(sorted(fs)))
        stars.append(_stars_of_forest(fs))
    return StarForestDecomposition(tuple(forests), tuple(stars), method, fell_back)


def _components_vertex_counts(edge_list) -> list[int]:
    adj: dict[str, set[str]] = {}
    for u, v in edge_list:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    counts, seen = [], set()
    for start in adj:
        if start in seen:
            continue
        comp, stack = {start}, [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        counts.append(len(comp))
    return counts


def uniform_set_partition(elements, rng: random.Random) -> list[frozenset]:
    """Uniformly random set partition via random urn assignment.

    Draws the urn count k with probability proportional to k^n / k!, then
    assigns elements independently and uniformly to urns; the nonempty urns
    form a uniform partition.
    """
    items = list(elements)
    n = len(items)
    if n == 0:
        return []
    log_w = [n * math.log(k) - math.lgamma(k + 1) for k in range(1, n + 60)]
    top = max(log_w)
    weights = [math.exp(w - top) for w in log_w]
    total = sum(weights)
    r = rng.random() * total
    k = len(weights)
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if r <= acc:
            k = i + 1
            break
    urns: dict[int, set] = {}
    for item in items:
        urns.setdefault(rng.randrange(k), set()).add(item)
    return [frozenset(b) for b in urns.values()]


BRUTE_COMPONENT_LIMIT = 10
BRUTE_RETRY_CAP = 200_000


def star_forest_decompose(edges, method: str = "greedy", seed=None,
                          retry_cap: int = BRUTE_RETRY_CAP) -> StarForestDecomposition:
    """Partition an edge set into star forests.

    degenerate: one forest per edge.
    greedy: repeatedly pull the maximal star at the highest-degree vertex
        (ties lexicographic) into the first forest that stays a star forest.
    brute: sample uniformly random edge partitions until every block is a
        star forest, falling back to greedy (flagged) after ``retry_cap``
        samples. Requires every connected component of the edge set to span
        at most 10 vertices, keeping the partition space near the Bell
        number B_10 = 115975.
    """
    edge_list = sorted({vertex_pair(u, v) for u, v in edges})
    universe = frozenset(edge_list)
    if method == "degenerate":
        return _build_decomposition([{e} for e in edge_list], "degenerate", universe)
    if method == "greedy":
        return _greedy_decompose(edge_list)
    if method == "brute":
        if any(c > BRUTE_COMPONENT_LIMIT for c in _components_vertex_counts(edge_list)):
            raise InputError(
                f"brute decomposition needs components of at most "
                f"{BRUTE_COMPONENT_LIMIT} vertices")
        rng = random.Random(seed)
        for _ in range(retry_cap):
            blocks = uniform_set_partition(edge_list, rng)
            if all(forest_is_admissible(b, universe) for b in blocks):
                blocks.sort(key=lambda b: sorted(b))
                return _build_decomposition(blocks, "brute", universe)
        fallback = _greedy_decompose(edge_list)
        return StarForestDecomposition(fallback.forests, fallback.stars,
                                       "brute", fell_back=True)
    raise InputError(f"unknown star forest method {method!r}")


def _greedy_decompose(edge_list) -> StarForestDecomposition:
    universe = frozenset(edge_list)
    residual = set(edge_list)
    forest_sets: list[set[Edge]] = []
    while residual:
        degree: dict[str, int] = {}
        for u, v in residual:
            degree[u] = degree.get(u, 0) + 1
            degree[v] = degree.get(v, 0) + 1
        center = min(degree, key=lambda v: (-degree[v], v))
        star = {e for e in residual if center in e}
        for fs in forest_sets:
            if forest_is_admissible(fs | star, universe):
                fs |= star
                break
        else:
            forest_sets.append(set(star))
        residual -= star
    return _build_decomposition(forest_sets, "greedy", universe)


COVER_METHODS = {
    "degenerate": cover_degenerate,
    "percolation": cover_percolation,
    "partition": cover_partition,
}

SFD_METHODS = ("degenerate", "greedy", "brute")


def clique_edge_cover(graph: SignedCoherenceGraph, method: str) -> CliqueEdgeCover:
    try:
        fn = COVER_METHODS[method]
    except KeyError:
        raise InputError(f"unknown cover method {method!r}") from None
    return fn(graph)
