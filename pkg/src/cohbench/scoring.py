"""Parse model responses, repair known reconstruction slips, and score.

Responses carry prompt-convention weights (1 = inconsistent, 0 = consistent
in benchmark mode; 0-10 ratings in practical mode); the parser converts them
back to signed weights immediately so everything downstream speaks one
convention. Scoring treats every unordered vertex pair as a three-class
label in {-1, 0, +1} with absent edges as 0.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError
from .graphs import SignedCoherenceGraph, all_vertex_pairs, l1_distance

LABELS = (-1, 0, 1)

FLAG_RENAMED = "renamed_nodes"
FLAG_CASE = "case_fixed"
FLAG_MISSING = "missing_vertices"
FLAG_HALLUCINATED = "hallucinated"
FLAG_PARSE_FAILED = "parse_failed"

# node names may carry wrappers like Proposition(a), so allow parentheses
# inside a name and let postprocessing strip them; triples come as ( ) tuples
# per the prompt but some models emit [ ] lists instead. An opener directly
# followed by another opener is list nesting, not a triple.
_TRIPLE_RE = re.compile(
    r"[(\[](?!\s*[(\[])\s*['\"]?(?P<u>[^'\",\[\]]+?)['\"]?\s*,"
    r"\s*['\"]?(?P<v>[^'\",\[\]]+?)['\"]?\s*,"
    r"\s*(?P<w>-?\d+(?:\.\d+)?)\s*[)\]]")


def _bracket_spans(text: str):
    """Balanced [...] spans, outermost only."""
    spans = []
    depth = 0
    start = None
    for i, ch in enumerate(text):
        if ch == "[":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "]" and depth > 0:
            depth -= 1
            if depth == 0:
                spans.append(text[start:i + 1])
    return spans


def _convert_weight(raw: float, benchmark_mode: bool) -> float:
    if benchmark_mode:
        # prompt convention: 1 = inconsistent, 0 = consistent
        return -1.0 if raw >= 0.5 else 1.0
    return max(-1.0, min(1.0, (raw - 5.0) / 5.0))


def parse_edge_list(text: str, benchmark_mode: bool = True):
    """Extract (u, v, weight) triples from a response.

    Looks for the outermost bracketed list of (name, name, number) triples,
    tolerating whitespace, quote style, and surrounding prose. Benchmark
    responses rate inconsistent pairs 1 and consistent pairs 0, so weights
    map 1 -> -1 and 0 -> +1; practical responses rate 0-10 and map to
    (r - 5) / 5. Returns (edges, parse_failed).
    """
    spans = _bracket_spans(text)
    if not spans:
        return [], True
    best = max(spans, key=lambda s: len(_TRIPLE_RE.findall(s)))
    triples = _TRIPLE_RE.findall(best)
    if not triples:
        # an explicitly empty list is a valid "no edges" answer
        if any(s.strip("[] \t\r\n") == "" for s in spans):
            return [], False
        return [], True
    edges = [(u.strip(), v.strip(), _convert_weight(float(w), benchmark_mode))
             for u, v, w in triples]
    return edges, False


_WRAPPER_RES = (
    re.compile(r"^proposition\s*\(\s*(.+?)\s*\)$", re.IGNORECASE),
    re.compile(r"^\(\s*(.+?)\s*\)$"),
)


def _clean_name(name: str, universe: set[str], flags: set[str]) -> str:
    name = name.strip().strip("'\"")
    for pattern in _WRAPPER_RES:
        m = pattern.match(name)
        if m:
            name = m.group(1).strip().strip("'\"")
            flags.add(FLAG_RENAMED)
    if name not in universe and len(name) == 1 and name.lower() in universe:
        name = name.lower()
        flags.add(FLAG_CASE)
    return name


def postprocess(raw_edges, vertex_universe):
    """Repair node names and align a raw edge list to a vertex universe.

    Strips Proposition(...) and bare parenthesis wrappers, lowercases
    single-letter names that match a universe vertex case-insensitively,
    flags universe vertices missing from the response (they stay isolated),
    and flags any residual unknown vertex as a hallucination. Returns
    (graph over the full universe, flags).
    """
    universe = set(vertex_universe)
    flags: set[str] = set()
    weights: dict[tuple[str, str], float] = {}
    mentioned: set[str] = set()
    hallucinated = False
    for u, v, w in raw_edges:
        cu = _clean_name(str(u), universe, flags)
        cv = _clean_name(str(v), universe, flags)
        if cu not in universe or cv not in universe:
            hallucinated = True
            continue
        if cu == cv:
            continue
        mentioned.update((cu, cv))
        pair = (cu, cv) if cu < cv else (cv, cu)
        weights.setdefault(pair, float(w))
    if hallucinated:
        flags.add(FLAG_HALLUCINATED)
    if universe - mentioned:
        flags.add(FLAG_MISSING)
    graph = SignedCoherenceGraph(sorted(universe),
                                 [(u, v, w) for (u, v), w in sorted(weights.items())])
    return graph, flags


def _label(w: float) -> int:
    return 0 if w == 0 else (1 if w > 0 else -1)


def confusion_counts(truth: SignedCoherenceGraph,
                     predicted: SignedCoherenceGraph) -> dict:
    """3x3 counts over (true label, predicted label) per unordered pair."""
    if truth.vertex_set != predicted.vertex_set:
        raise InputError("graphs must share the same vertex set")
    counts = {(t, p): 0 for t in LABELS for p in LABELS}
    for u, v in all_vertex_pairs(truth.vertices):
        counts[(_label(truth.weight(u, v)), _label(predicted.weight(u, v)))] += 1
    return counts


def micro_f1_from_confusion(counts: dict) -> float:
    """Micro-averaged F1 over the three labels.

    For single-label multiclass data this equals plain accuracy; the full
    formula is kept so the identity stays checkable.
    """
    tp = sum(counts[(c, c)] for c in LABELS)
    fp = sum(counts[(t, p)] for t in LABELS for p in LABELS if t != p)
    fn = fp
    total = tp + fp
    if total == 0:
        return 1.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def micro_f1(truth: SignedCoherenceGraph,
             predicted: SignedCoherenceGraph) -> float:
    return micro_f1_from_confusion(confusion_counts(truth, predicted))


@dataclass(frozen=True)
class ReconstructionReport:
    problem_id: str
    model_id: str
    regime: str
    sparsity: str
    confusion: dict = field(compare=False)
    micro_f1: float = 0.0
    l1_normalized: float = 0.0
    flags: frozenset[str] = frozenset()

    @property
    def excluded(self) -> bool:
        return FLAG_HALLUCINATED in self.flags


def score_attempt(truth: SignedCoherenceGraph, response_text: str,
                  problem_id: str, model_id: str, regime: str = "base",
                  sparsity: str = "") -> ReconstructionReport:
    """Full pipeline: parse, postprocess, score one response.

    Hallucinated attempts still carry metrics but are marked excluded.
    Unparsable responses score 0 by convention (and are not excluded, so
    they weigh on the aggregate rather than silently inflating it).
    """
    raw, failed = parse_edge_list(response_text, benchmark_mode=True)
    predicted, flags = postprocess(raw, truth.vertices)
    if failed:
        flags = set(flags) | {FLAG_PARSE_FAILED}
    counts = confusion_counts(truth, predicted)
    f1 = 0.0 if failed else micro_f1_from_confusion(counts)
    l1 = l1_distance(truth, predicted, normalized=True)
    return ReconstructionReport(problem_id, model_id, regime, sparsity,
                                counts, f1, l1, frozenset(flags))


@dataclass(frozen=True)
class SummaryRow:
    model_id: str
    sparsity: str
    regime: str
    n: int
    micro_f1_mean: float
    micro_f1_sd: float
    l1_mean: float
    l1_sd: float


def _mean_sd(values):
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate(reports) -> list[SummaryRow]:
    """Per-(model, sparsity, regime) mean and sample standard deviation.

    Excluded (hallucinated) reports are omitted. Cells with no surviving
    reports produce no row.
    """
    cells: dict[tuple[str, str, str], list[ReconstructionReport]] = {}
    for r in reports:
        if r.excluded:
            continue
        cells.setdefault((r.model_id, r.sparsity, r.regime), []).append(r)
    rows = []
    for key in sorted(cells):
        group = cells[key]
        f1_mean, f1_sd = _mean_sd([r.micro_f1 for r in group])
        l1_mean, l1_sd = _mean_sd([r.l1_normalized for r in group])
        rows.append(SummaryRow(*key, len(group), f1_mean, f1_sd,
                               l1_mean, l1_sd))
    return rows


REPORT_COLUMNS = ("problem_id", "model_id", "regime", "sparsity",
                  "micro_f1", "l1_normalized", "flags", "excluded")
SUMMARY_COLUMNS = ("model_id", "sparsity", "regime", "n",
                   "micro_f1_mean", "micro_f1_sd", "l1_mean", "l1_sd")


def write_reports_csv(reports, path):
    reports = sorted(reports, key=lambda r: (r.problem_id, r.model_id,
                                             r.regime))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow([
                r.problem_id, r.model_id, r.regime, r.sparsity,
                f"{r.micro_f1:.6f}", f"{r.l1_normalized:.6f}",
                ";".join(sorted(r.flags)), int(r.excluded),
            ])
    return Path(path)


def write_summary_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for r in rows:
            writer.writerow([
                r.model_id, r.sparsity, r.regime, r.n,
                f"{r.micro_f1_mean:.6f}", f"{r.micro_f1_sd:.6f}",
                f"{r.l1_mean:.6f}", f"{r.l1_sd:.6f}",
            ])
    return Path(path)
