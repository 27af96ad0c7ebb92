"""Coherence maximization: exact and heuristic cuts, parity-equation view,
Gibbs acceptance probabilities, and accepted-part labeling.

Maximizing coherence of a signed graph is MAX-CUT on the negated adjacency;
the same problem repackages as satisfying the most rows of B x = c over
GF(2), where B is the edge-vertex incidence matrix and c flags negative
edges. Both views live here so they can cross-check each other.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InputError
from .graphs import Cut, SignedCoherenceGraph, coherence

EXACT_VERTEX_LIMIT = 26
GIBBS_VERTEX_LIMIT = 20


@dataclass(frozen=True)
class AnnealSchedule:
    t0: float
    t_end: float
    steps: int


def default_schedule(graph: SignedCoherenceGraph) -> AnnealSchedule:
    """Conservative geometric schedule for graphs up to a few dozen vertices."""
    max_w = max((abs(w) for _, _, w in graph.edges()), default=1.0)
    n = max(len(graph.vertices), 1)
    return AnnealSchedule(t0=max_w * n, t_end=1e-3, steps=200 * n * n)


def label_parts(graph: SignedCoherenceGraph, cut: Cut) -> Cut:
    """Mark the accepted (estimated-true) side of a cut.

    Each part scores its internal coherence, the sum of within-part edge
    weights normalized by the number of vertex pairs in the part; parts with
    fewer than two vertices score 0. The higher-scoring part is accepted;
    exact ties accept the part containing the lexicographically smallest
    vertex.
    """
    members = cut.members
    complement = graph.vertex_set - members

    def internal(part):
        k = len(part)
        if k < 2:
            return 0.0
        total = sum(w for u, v, w in graph.edges() if u in part and v in part)
        return total / (k * (k - 1) / 2)

    score_m = internal(members)
    score_c = internal(complement)
    if score_m > score_c:
        accepted = members
    elif score_c > score_m:
        accepted = frozenset(complement)
    else:
        smallest = min(graph.vertices)
        accepted = members if smallest in members else frozenset(complement)
    return Cut(members, cut.coherence, accepted)


def _index_edges(graph: SignedCoherenceGraph):
    verts = sorted(graph.vertices)
    pos = {v: i for i, v in enumerate(verts)}
    edges = [(pos[u], pos[v], w) for u, v, w in graph.edges()]
    return verts, edges


def _lex_min_mask(masks: np.ndarray, nbits: int) -> int:
    """Mask whose ascending-bit tuple is lexicographically smallest.

    Bit tuples compare like sorted vertex tuples: a strict prefix wins,
    otherwise the first differing element decides.
    """
    pool = masks
    prefix = 0
    while True:
        if (pool == prefix).any():
            return prefix
        for b in range(nbits):
            bit = 1 << b
            if prefix & bit:
                continue
            low = bit - 1
            cand = pool[((pool & low) == (prefix & low)) & ((pool & bit) != 0)]
            if cand.size:
                prefix |= bit
                pool = cand
                break
        else:
            raise AssertionError("tie pool exhausted without a minimum")


def max_cut_exact(graph: SignedCoherenceGraph) -> Cut:
    """Globally optimal cut by enumerating the 2^(n-1) bipartitions.

    The lexicographically smallest vertex is pinned inside the returned part;
    ties pick the part whose sorted member tuple is smallest.
    """
    verts, edges = _index_edges(graph)
    n = len(verts)
    if n > EXACT_VERTEX_LIMIT:
        raise CapacityError(
            f"exact solver enumerates 2^(n-1) cuts and is limited to "
            f"{EXACT_VERTEX_LIMIT} vertices (got {n}); use the greedy or "
            f"annealing heuristics instead")
    if n == 0:
        return Cut(frozenset(), 0.0, None)
    free = n - 1  # vertex 0 pinned inside the part
    chunk_bits = min(free, 20)
    best = -math.inf
    tie_chunks: list[np.ndarray] = []
    for start in range(0, 1 << free, 1 << chunk_bits):
        masks = np.arange(start, start + (1 << chunk_bits), dtype=np.uint32)
        total = np.zeros(masks.size)
        for iu, iv, w in edges:
            bu = ((masks >> (iu - 1)) & 1) if iu > 0 else 1
            bv = (masks >> (iv - 1)) & 1
            total -= w * (bu != bv)
        chunk_best = total.max()
        if chunk_best > best:
            best = chunk_best
            tie_chunks = []
        if chunk_best == best:
            tie_chunks.append(masks[total == best])
    ties = np.concatenate(tie_chunks)
    winner = _lex_min_mask(ties, free)
    members = frozenset([verts[0]] + [verts[b + 1] for b in range(free)
                                      if winner >> b & 1])
    return label_parts(graph, Cut(members, float(best)))


def _local_search(side: list[int], edges_by_vertex, coh: float):
    """Best-improvement single-vertex moves until no move helps."""
    improved = True
    while improved:
        improved = False
        best_gain, best_v = 0.0, None
        for v, incident in enumerate(edges_by_vertex):
            gain = 0.0
            for u, w in incident:
                gain += w if side[u] != side[v] else -w
            if gain > best_gain + 1e-12:
                best_gain, best_v = gain, v
        if best_v is not None:
            side[best_v] ^= 1
            coh += best_gain
            improved = True
    return coh


def _flip_gain(v, side, edges_by_vertex) -> float:
    gain = 0.0
    for u, w in edges_by_vertex[v]:
        gain += w if side[u] != side[v] else -w
    return gain


def _edges_by_vertex(n, edges):
    by_v = [[] for _ in range(n)]
    for iu, iv, w in edges:
        by_v[iu].append((iv, w))
        by_v[iv].append((iu, w))
    return by_v


def _side_to_cut(graph, verts, side) -> Cut:
    # canonicalize: the smallest vertex belongs to the returned part
    if side[0] == 0:
        members = frozenset(v for v, s in zip(verts, side) if s == 0)
    else:
        members = frozenset(v for v, s in zip(verts, side) if s == 1)
    return label_parts(graph, Cut(members, coherence(graph, members)))


def max_cut_greedy(graph: SignedCoherenceGraph, seed=None,
                   restarts: int = 10) -> Cut:
    """Randomized local search: random bipartition plus single-vertex moves
    while any move strictly increases coherence; best cut over restarts."""
    verts, edges = _index_edges(graph)
    n = len(verts)
    if n == 0:
        return Cut(frozenset(), 0.0, None)
    by_v = _edges_by_vertex(n, edges)
    rng = random.Random(seed)
    best_side, best_coh = None, -math.inf
    for _ in range(max(1, restarts)):
        side = [rng.randint(0, 1) for _ in range(n)]
        coh = -sum(w for iu, iv, w in edges if side[iu] != side[iv])
        coh = _local_search(side, by_v, coh)
        if coh > best_coh:
            best_coh, best_side = coh, list(side)
    return _side_to_cut(graph, verts, best_side)


def max_cut_anneal(graph: SignedCoherenceGraph,
                   schedule: AnnealSchedule | None = None,
                   seed=None) -> Cut:
    """Single-vertex-flip Metropolis annealing with geometric cooling.

    Uphill moves are always accepted; downhill moves with probability
    exp(delta / t). Returns the best cut seen along the trajectory.
    """
    verts, edges = _index_edges(graph)
    n = len(verts)
    if n == 0:
        return Cut(frozenset(), 0.0, None)
    if schedule is None:
        schedule = default_schedule(graph)
    if schedule.steps < 1:
        raise InputError("annealing needs at least one step")
    by_v = _edges_by_vertex(n, edges)
    rng = random.Random(seed)
    side = [rng.randint(0, 1) for _ in range(n)]
    coh = -sum(w for iu, iv, w in edges if side[iu] != side[iv])
    best_side, best_coh = list(side), coh
    t0, t_end, steps = schedule.t0, schedule.t_end, schedule.steps
    ratio = (t_end / t0) ** (1.0 / max(steps - 1, 1)) if t0 > 0 else 1.0
    t = t0
    for _ in range(steps):
        v = rng.randrange(n)
        gain = _flip_gain(v, side, by_v)
        if gain >= 0 or (t > 0 and rng.random() < math.exp(gain / t)):
            side[v] ^= 1
            coh += gain
            if coh > best_coh:
                best_coh, best_side = coh, list(side)
        t *= ratio
    return _side_to_cut(graph, verts, best_side)


# ---------------------------------------------------------------------------
# parity-equation (2-XORSAT) view

@dataclass(frozen=True)
class XorSatInstance:
    """Edge-vertex incidence system B x = c over GF(2).

    One row per edge with ones at the two endpoint columns; the right-hand
    side is 1 exactly on negative edges.
    """

    incidence: np.ndarray  # shape (|E|, |V|), dtype uint8
    rhs: np.ndarray        # shape (|E|,), dtype uint8
    row_order: tuple[tuple[str, str], ...]
    column_order: tuple[str, ...]

    def to_text(self) -> str:
        """Line-per-row export: "u v rhs"."""
        lines = [f"{u} {v} {int(r)}" for (u, v), r in zip(self.row_order, self.rhs)]
        return "\n".join(lines) + ("\n" if lines else "")


def to_xorsat(graph: SignedCoherenceGraph, edge_order=None) -> XorSatInstance:
    """Repackage a graph with +/-1 weights as parity equations.

    ``edge_order`` fixes the row sequence (default: lexicographic edge order);
    it must list every edge exactly once.
    """
    for _, _, w in graph.edges():
        if w not in (-1.0, 1.0):
            raise InputError("parity encoding requires weights in {-1, +1}")
    columns = tuple(sorted(graph.vertices))
    col = {v: i for i, v in enumerate(columns)}
    if edge_order is None:
        rows = [(u, v) for u, v in graph.edge_pairs()]
    else:
        rows = [tuple(sorted(e)) for e in edge_order]
        if sorted(rows) != graph.edge_pairs():
            raise InputError("edge_order must enumerate the graph's edges")
        rows = [tuple(e) for e in edge_order]
    m = len(rows)
    incidence = np.zeros((m, len(columns)), dtype=np.uint8)
    rhs = np.zeros(m, dtype=np.uint8)
    for i, (u, v) in enumerate(rows):
        incidence[i, col[u]] = 1
        incidence[i, col[v]] = 1
        rhs[i] = 1 if graph.weight(u, v) < 0 else 0
    return XorSatInstance(incidence, rhs, tuple(rows), columns)


def from_xorsat(instance: XorSatInstance) -> SignedCoherenceGraph:
    """Rebuild the signed graph encoded by a parity instance."""
    edges = []
    for (u, v), r in zip(instance.row_order, instance.rhs):
        edges.append((u, v, -1.0 if r else 1.0))
    return SignedCoherenceGraph(instance.column_order, edges, benchmark=True)


@dataclass(frozen=True)
class XorSatScore:
    satisfied: int
    unsatisfied: int


def xorsat_objective(instance: XorSatInstance, assignment) -> XorSatScore:
    """Count rows whose endpoint parity matches / misses the right-hand side.

    ``assignment`` is a 0/1 vector aligned with the instance's column order.
    """
    x = np.asarray(list(assignment), dtype=np.uint8)
    if x.shape != (len(instance.column_order),):
        raise InputError(
            f"assignment length {x.size} != {len(instance.column_order)} columns")
    parity = (instance.incidence @ x) % 2
    satisfied = int((parity == instance.rhs).sum())
    return XorSatScore(satisfied, len(instance.rhs) - satisfied)


def cut_to_assignment(instance: XorSatInstance, part) -> list[int]:
    """x_v = 1 exactly when v belongs to the part."""
    members = set(part)
    return [1 if v in members else 0 for v in instance.column_order]


# ---------------------------------------------------------------------------
# Gibbs acceptance probabilities

def acceptance_probabilities(graph: SignedCoherenceGraph,
                             temperature: float) -> dict[str, float]:
    """Per-vertex probability of landing in the accepted part under a Gibbs
    measure over unordered bipartitions, each weighted exp(coherence / t).

    Acceptance per bipartition follows label_parts. Exact enumeration, so the
    graph is limited to a modest number of vertices.
    """
    if temperature <= 0:
        raise InputError("temperature must be positive")
    verts, edges = _index_edges(graph)
    n = len(verts)
    if n > GIBBS_VERTEX_LIMIT:
        raise CapacityError(
            f"Gibbs enumeration is limited to {GIBBS_VERTEX_LIMIT} vertices "
            f"(got {n})")
    if n == 0:
        return {}
    states = 1 << (n - 1)  # vertex 0 pinned inside the part
    coh_values = []
    accepted_masks = []
    for mask in range(states):
        members = frozenset([verts[0]] + [verts[b + 1] for b in range(n - 1)
                                          if mask >> b & 1])
        c = coherence(graph, members)
        labeled = label_parts(graph, Cut(members, c))
        coh_values.append(c)
        accepted_masks.append(labeled.accepted)
    top = max(coh_values)
    weights = [math.exp((c - top) / temperature) for c in coh_values]
    total = sum(weights)
    acc = {v: 0.0 for v in verts}
    for w, accepted in zip(weights, accepted_masks):
        for v in accepted:
            acc[v] += w
    return {v: acc[v] / total for v in verts}


SOLVER_METHODS = ("exact", "greedy", "anneal")


def solve(graph: SignedCoherenceGraph, method: str = "exact", seed=None,
          restarts: int = 10, schedule: AnnealSchedule | None = None) -> Cut:
    if method == "exact":
        return max_cut_exact(graph)
    if method == "greedy":
        return max_cut_greedy(graph, seed=seed, restarts=restarts)
    if method == "anneal":
        return max_cut_anneal(graph, schedule=schedule, seed=seed)
    raise InputError(f"unknown solver method {method!r}")
