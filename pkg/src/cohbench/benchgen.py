"""Benchmark synthesis: connected signed ER graphs plus proposition variants.

Graphs are sampled by joining an Erdos-Renyi draw to the minimum spanning
tree of a complete graph with random edge weights, which guarantees
connectivity. The edge-inclusion probability is adjusted for the spanning
tree's contribution so the requested figure acts as a target for the final
edge density; small sparse sizes therefore come out as pure random trees.
Every problem carries the base proposition set plus the four uncertainty
variants, all verified to model the graph before anything is written.
"""

from __future__ import annotations

import hashlib
import json
import random
import string
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .errors import InputError
from .graphs import SignedCoherenceGraph, all_vertex_pairs
from .propositions import (PropositionSet, inject_uncertainty,
                           model_coherence_graph, verify_model)

DEFAULT_SIZES = (5, 7, 9, 11, 13, 15, 17, 19, 21, 23)
DEFAULT_COUNTS = {5: 4, 7: 4, 9: 4, 11: 4, 13: 4, 15: 4, 17: 4, 19: 4,
                  21: 3, 23: 3}
FUZZY_REGIMES = ("zero", "low", "medium", "high")


def vertex_labels(n: int) -> list[str]:
    if n > 26:
        raise InputError("benchmark graphs use single-letter vertex labels")
    return list(string.ascii_lowercase[:n])


def _kruskal_mst(vertices, weights):
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    tree = []
    for _, u, v in sorted(weights):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            tree.append((u, v))
    return tree


def sample_er_connected(n: int, p: float, seed=None) -> SignedCoherenceGraph:
    """Connected signed graph: ER(n, p) unioned with a random-weight MST.

    Every pair enters independently with probability p; the spanning tree of
    a complete graph with iid uniform weights is added on top; each surviving
    edge gets a uniform +/-1 sign.
    """
    if n < 2:
        raise InputError("need at least two vertices")
    if not 0.0 <= p <= 1.0:
        raise InputError(f"edge probability {p} outside [0, 1]")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    verts = vertex_labels(n)
    pairs = all_vertex_pairs(verts)
    chosen = {pair for pair in pairs if rng.random() < p}
    mst_weights = [(rng.random(), u, v) for u, v in pairs]
    chosen.update(_kruskal_mst(verts, mst_weights))
    edges = [(u, v, 1.0 if rng.random() < 0.5 else -1.0)
             for u, v in sorted(chosen)]
    return SignedCoherenceGraph(verts, edges, benchmark=True)


def density_adjusted_p(n: int, target: float) -> float:
    """ER probability for the non-tree share of a density target.

    The spanning tree contributes n-1 edges for free, so the independent
    inclusion probability is scaled down (to zero when the tree alone
    already exceeds the target).
    """
    total_pairs = n * (n - 1) // 2
    tree_edges = n - 1
    if total_pairs == tree_edges:
        return 0.0
    p = (target * total_pairs - tree_edges) / (total_pairs - tree_edges)
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class GenConfig:
    sizes: tuple[int, ...] = DEFAULT_SIZES
    counts: dict[int, int] = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    sparse_target: float = 0.15
    dense_target: float = 0.75
    cover_method: str = "percolation"
    sfd_method: str = "greedy"
    seed: int = 0
    regimes: tuple[str, ...] = ("sparse", "dense")

    def __post_init__(self):
        for s in self.sizes:
            if s < 2:
                raise InputError(f"size {s} too small")
            if self.counts.get(s, 0) < 1:
                raise InputError(f"no problem count for size {s}")
        for t in (self.sparse_target, self.dense_target):
            if not 0.0 <= t <= 1.0:
                raise InputError(f"density target {t} outside [0, 1]")
        for r in self.regimes:
            if r not in ("sparse", "dense"):
                raise InputError(f"unknown sparsity regime {r!r}")

    def target_for(self, sparsity: str) -> float:
        return self.sparse_target if sparsity == "sparse" else self.dense_target

    @classmethod
    def from_json_dict(cls, data: dict) -> "GenConfig":
        kwargs = {}
        if "sizes" in data:
            kwargs["sizes"] = tuple(int(s) for s in data["sizes"])
        if "counts" in data:
            kwargs["counts"] = {int(k): int(v) for k, v in data["counts"].items()}
        elif "sizes" in data:
            kwargs["counts"] = {s: 4 for s in kwargs["sizes"]}
        for key in ("sparse_target", "dense_target", "cover_method",
                    "sfd_method", "seed"):
            if key in data:
                kwargs[key] = data[key]
        if "regimes" in data:
            kwargs["regimes"] = tuple(data["regimes"])
        return cls(**kwargs)

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        d["counts"] = {str(k): v for k, v in sorted(self.counts.items())}
        d["regimes"] = list(self.regimes)
        return d


@dataclass(frozen=True)
class BenchmarkProblem:
    id: str
    graph: SignedCoherenceGraph
    variants: dict[str, PropositionSet]
    meta: dict

    def to_json_dict(self) -> dict:
        base = self.variants["base"]
        return {
            "id": self.id,
            "graph": self.graph.to_json_dict(),
            "meta": dict(self.meta),
            "variants": {r: ps.to_json_dict()
                         for r, ps in sorted(self.variants.items())},
            "provenance": base.provenance,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BenchmarkProblem":
        graph = SignedCoherenceGraph.from_json_dict(data["graph"], benchmark=True)
        variants = {r: PropositionSet.from_json_dict(ps)
                    for r, ps in data["variants"].items()}
        return cls(data["id"], graph, variants, dict(data["meta"]))


def _problem_specs(config: GenConfig):
    counter = 0
    for sparsity in config.regimes:
        for size in config.sizes:
            for k in range(config.counts[size]):
                yield counter, sparsity, size, k
                counter += 1


def sample_benchmark_graphs(config: GenConfig):
    """The graph-sampling half of generation: (id, sparsity, graph) rows."""
    rows = []
    for counter, sparsity, size, k in _problem_specs(config):
        target = config.target_for(sparsity)
        p = density_adjusted_p(size, target)
        graph = sample_er_connected(size, p, seed=f"{config.seed}:{counter}")
        problem_id = f"{sparsity}-n{size:02d}-i{k}"
        rows.append((problem_id, sparsity, graph))
    return rows


def generate_benchmark(config: GenConfig | None = None) -> list[BenchmarkProblem]:
    """Produce the full problem list for a configuration.

    Each problem is independently seeded from the master seed via a counter,
    so any single problem regenerates stably. All five regime variants are
    verified to model the graph before the problem is emitted.
    """
    config = config or GenConfig()
    problems = []
    for counter, sparsity, size, k in _problem_specs(config):
        target = config.target_for(sparsity)
        p = density_adjusted_p(size, target)
        sub = f"{config.seed}:{counter}"
        graph = sample_er_connected(size, p, seed=sub)
        base = model_coherence_graph(graph, config.cover_method,
                                     config.sfd_method, seed=f"{sub}:model")
        variants = {"base": base}
        for regime in FUZZY_REGIMES:
            variants[regime] = inject_uncertainty(base, regime,
                                                  seed=f"{sub}:{regime}")
        for regime, ps in variants.items():
            report = verify_model(graph, ps)
            if not report.ok:
                raise AssertionError(
                    f"generated propositions fail verification "
                    f"({sparsity}-n{size:02d}-i{k}/{regime}): "
                    f"{report.mismatches[:3]}")
        meta = {
            "size": size,
            "sparsity": sparsity,
            "density_target": target,
            "achieved_density": graph.density(),
            "cover_method": config.cover_method,
            "sfd_method": config.sfd_method,
            "seed": sub,
        }
        problems.append(BenchmarkProblem(f"{sparsity}-n{size:02d}-i{k}",
                                         graph, variants, meta))
    return problems


# ---------------------------------------------------------------------------
# on-disk layout: one JSON per problem plus a manifest

def _dump(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_benchmark(problems, out_dir, config: GenConfig) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for problem in problems:
        name = f"{problem.id}.json"
        payload = _dump(problem.to_json_dict()).encode()
        (out / name).write_bytes(payload)
        entries.append({
            "id": problem.id,
            "file": name,
            "sha256": hashlib.sha256(payload).hexdigest(),
        })
    manifest = {
        "tool": "cohbench",
        "version": __version__,
        "config": config.to_json_dict(),
        "problems": sorted(entries, key=lambda e: e["id"]),
    }
    (out / "manifest.json").write_text(_dump(manifest))
    return out


def load_benchmark(bench_dir) -> list[BenchmarkProblem]:
    bench = Path(bench_dir)
    manifest_path = bench / "manifest.json"
    if not manifest_path.exists():
        raise InputError(f"no manifest.json under {bench}")
    manifest = json.loads(manifest_path.read_text())
    problems = []
    for entry in manifest["problems"]:
        data = json.loads((bench / entry["file"]).read_text())
        problems.append(BenchmarkProblem.from_json_dict(data))
    return problems


def load_problem(bench_dir, problem_id: str) -> BenchmarkProblem:
    path = Path(bench_dir) / f"{problem_id}.json"
    if not path.exists():
        raise InputError(f"no problem {problem_id!r} under {bench_dir}")
    return BenchmarkProblem.from_json_dict(json.loads(path.read_text()))
