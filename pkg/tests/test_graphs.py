import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohbench.errors import InputError
from cohbench.graphs import (SignedCoherenceGraph, coherence,
                             convergence_curve, l1_distance, median_consensus)

from conftest import random_signed_graph


class TestGraphConstruction:
    def test_rejects_self_loop(self):
        with pytest.raises(InputError):
            SignedCoherenceGraph("ab", [("a", "a", 1.0)])

    def test_rejects_duplicate_pair(self):
        with pytest.raises(InputError):
            SignedCoherenceGraph("ab", [("a", "b", 1.0), ("b", "a", -1.0)])

    def test_rejects_unknown_endpoint(self):
        with pytest.raises(InputError):
            SignedCoherenceGraph("ab", [("a", "z", 1.0)])

    def test_rejects_out_of_range_weight(self):
        with pytest.raises(InputError):
            SignedCoherenceGraph("ab", [("a", "b", 1.5)])

    def test_benchmark_mode_restricts_weights(self):
        with pytest.raises(InputError):
            SignedCoherenceGraph("ab", [("a", "b", 0.5)], benchmark=True)
        g = SignedCoherenceGraph("ab", [("a", "b", -1.0)], benchmark=True)
        assert g.benchmark

    def test_json_round_trip_sorted(self):
        g = SignedCoherenceGraph("cab", [("c", "a", -1.0), ("b", "c", 1.0)])
        data = g.to_json_dict()
        assert data["vertices"] == ["a", "b", "c"]
        assert data["edges"] == [["a", "c", -1.0], ["b", "c", 1.0]]
        assert SignedCoherenceGraph.from_json(g.to_json()) == g


class TestCoherence:
    def test_triangle_golden_values(self, triangle):
        assert coherence(triangle, {"a", "c"}) == 0.0
        assert coherence(triangle, {"a", "b"}) == 2.0

    def test_empty_part_is_zero(self, pentagon):
        assert coherence(pentagon, set()) == 0.0

    def test_unknown_vertex_rejected(self, triangle):
        with pytest.raises(InputError):
            coherence(triangle, {"a", "z"})

    def test_cut_symmetry(self):
        rng = random.Random(7)
        for _ in range(25):
            g = random_signed_graph(rng, rng.randint(2, 8), 0.5)
            verts = list(g.vertices)
            part = {v for v in verts if rng.random() < 0.5}
            complement = set(verts) - part
            assert coherence(g, part) == pytest.approx(coherence(g, complement))


class TestL1Distance:
    def test_identity(self, pentagon):
        assert l1_distance(pentagon, pentagon) == 0.0

    def test_flipped_edge(self, triangle):
        flipped = SignedCoherenceGraph(
            "abc", [("a", "b", -1.0), ("a", "c", -1.0), ("b", "c", -1.0)])
        assert l1_distance(triangle, flipped) == 2.0
        assert l1_distance(triangle, flipped, normalized=True) == pytest.approx(2 / 3)

    def test_vertex_mismatch_rejected(self, triangle):
        other = SignedCoherenceGraph("abd", [])
        with pytest.raises(InputError):
            l1_distance(triangle, other)

    def test_matches_entrywise_oracle(self):
        rng = random.Random(11)
        for _ in range(30):
            g1 = random_signed_graph(rng, 6, 0.5)
            g2 = random_signed_graph(rng, 6, 0.5)
            expected = 0.0
            for u, v in itertools.combinations(g1.vertices, 2):
                expected += abs(g1.weight(u, v) - g2.weight(u, v))
            assert l1_distance(g1, g2) == pytest.approx(expected)
            assert l1_distance(g1, g2, normalized=True) == pytest.approx(expected / 15)

    def test_metric_axioms_on_sampled_triples(self):
        rng = random.Random(13)
        for _ in range(60):
            a, b, c = (random_signed_graph(rng, 5, 0.5) for _ in range(3))
            dab = l1_distance(a, b)
            assert dab >= 0
            assert dab == pytest.approx(l1_distance(b, a))
            assert l1_distance(a, c) <= dab + l1_distance(b, c) + 1e-12
            if dab == 0:
                assert a == b


class TestMedianConsensus:
    def test_identical_graphs(self, pentagon):
        assert median_consensus([pentagon] * 3) == pentagon

    def test_middle_order_statistic(self):
        graphs = [SignedCoherenceGraph("ab", [("a", "b", w)])
                  for w in (1.0, 1.0, -1.0)]
        assert median_consensus(graphs).weight("a", "b") == 1.0

    def test_matches_sort_and_pick_oracle(self):
        rng = random.Random(17)
        for _ in range(20):
            graphs = [random_signed_graph(rng, 5, 0.5) for _ in range(5)]
            consensus = median_consensus(graphs)
            for u, v in itertools.combinations(graphs[0].vertices, 2):
                ws = sorted(g.weight(u, v) for g in graphs)
                assert consensus.weight(u, v) == pytest.approx(ws[2])

    def test_even_count_uses_midpoint(self):
        graphs = [SignedCoherenceGraph("ab", [("a", "b", w)]) if w else
                  SignedCoherenceGraph("ab", []) for w in (1.0, 1.0, -1.0, 0)]
        # sorted weights -1, 0, 1, 1 -> midpoint of 0 and 1
        assert median_consensus(graphs).weight("a", "b") == 0.5

    def test_zero_median_drops_edge(self):
        graphs = [SignedCoherenceGraph("ab", [("a", "b", 1.0)]),
                  SignedCoherenceGraph("ab", [("a", "b", -1.0)])]
        assert median_consensus(graphs).num_edges() == 0

    def test_idempotent(self):
        rng = random.Random(19)
        graphs = [random_signed_graph(rng, 4, 0.6) for _ in range(5)]
        once = median_consensus(graphs)
        again = once
        for _ in range(3):
            again = median_consensus([again])
        assert again == once

    def test_minimizes_total_l1_exhaustively(self):
        rng = random.Random(23)
        verts = ["a", "b", "c", "d"]
        pairs = list(itertools.combinations(verts, 2))
        for _ in range(5):
            graphs = [random_signed_graph(rng, 4, 0.6) for _ in range(5)]
            consensus = median_consensus(graphs)
            total = sum(l1_distance(consensus, g) for g in graphs)
            best = min(
                sum(l1_distance(SignedCoherenceGraph(
                    verts, [(u, v, w) for (u, v), w in zip(pairs, ws) if w]), g)
                    for g in graphs)
                for ws in itertools.product((-1.0, 0, 1.0), repeat=len(pairs)))
            assert total <= best + 1e-12

    def test_errors(self, triangle):
        with pytest.raises(InputError):
            median_consensus([])
        with pytest.raises(InputError):
            median_consensus([triangle, SignedCoherenceGraph("abd", [])])


_PAIRS = list(itertools.combinations("abcde", 2))


@st.composite
def small_graphs(draw):
    weights = draw(st.lists(st.sampled_from([-1.0, -0.5, 0.0, 0.5, 1.0]),
                            min_size=len(_PAIRS), max_size=len(_PAIRS)))
    edges = [(u, v, w) for (u, v), w in zip(_PAIRS, weights) if w]
    return SignedCoherenceGraph("abcde", edges)


class TestGraphProperties:
    @given(small_graphs(), st.sets(st.sampled_from("abcde")))
    @settings(max_examples=150, deadline=None)
    def test_cut_symmetry_holds(self, g, part):
        complement = set(g.vertices) - part
        assert coherence(g, part) == pytest.approx(coherence(g, complement))

    @given(small_graphs(), small_graphs(), small_graphs())
    @settings(max_examples=150, deadline=None)
    def test_l1_triangle_inequality(self, a, b, c):
        assert l1_distance(a, c) <= \
            l1_distance(a, b) + l1_distance(b, c) + 1e-12

    @given(st.lists(small_graphs(), min_size=1, max_size=7))
    @settings(max_examples=100, deadline=None)
    def test_median_within_componentwise_bounds(self, graphs):
        consensus = median_consensus(graphs)
        for u, v in _PAIRS:
            ws = [g.weight(u, v) for g in graphs]
            assert min(ws) <= consensus.weight(u, v) <= max(ws)


class TestConvergenceCurve:
    def test_full_subset_is_zero(self):
        rng = random.Random(29)
        graphs = [random_signed_graph(rng, 5, 0.5) for _ in range(8)]
        rows = convergence_curve(graphs, [8], trials_per_size=5, seed=1)
        assert rows[0][0] == 8
        assert all(d == 0.0 for d in rows[0][1])

    def test_identical_inputs_always_zero(self, pentagon):
        graphs = [pentagon] * 6
        rows = convergence_curve(graphs, [1, 3, 6], trials_per_size=4, seed=2)
        assert all(d == 0.0 for _, dists in rows for d in dists)

    def test_matches_exhaustive_subset_oracle(self):
        rng = random.Random(31)
        graphs = [random_signed_graph(rng, 4, 0.6) for _ in range(6)]
        full = median_consensus(graphs)
        oracle = {
            round(l1_distance(median_consensus([graphs[i] for i in subset]), full), 9)
            for subset in itertools.combinations(range(6), 3)
        }
        rows = convergence_curve(graphs, [3], trials_per_size=400, seed=3)
        observed = {round(d, 9) for d in rows[0][1]}
        assert observed == oracle

    def test_oversized_subsample_rejected(self, pentagon):
        with pytest.raises(InputError):
            convergence_curve([pentagon] * 3, [4], trials_per_size=1, seed=0)

    def test_bad_trials_rejected(self, pentagon):
        with pytest.raises(InputError):
            convergence_curve([pentagon] * 3, [2], trials_per_size=0, seed=0)
