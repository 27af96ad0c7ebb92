"""Proposition synthesis: build formula sets that provably model a signed graph.

Each vertex receives a conjunction of clauses "variable has property" or
"variable lacks property". Variables correspond to cliques of an edge cover,
properties to star forests of each clique's negative edges, so a simple
syntactic oracle over clause pairs reproduces the graph's sign structure
exactly. Fuzzy degrees layer numeric uncertainty onto the same skeleton
without ever flipping a polarity.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace

from . import covers
from .errors import FormulaParseError, InputError
from .graphs import SignedCoherenceGraph, all_vertex_pairs

REGIMES = ("base", "zero", "low", "medium", "high")

# (asserted band, negated band) for each fuzzy regime
UNCERTAINTY_BANDS = {
    "zero": ((1.0, 1.0), (0.0, 0.0)),
    "low": ((0.75, 1.0), (0.0, 0.25)),
    "medium": ((0.625, 0.75), (0.25, 0.375)),
    "high": ((0.5, 0.625), (0.375, 0.5)),
}

_PROPERTY_LETTERS = "PQRSTUVWXYZABCDEFGHIJKLMNO"


def property_symbol(index: int) -> str:
    """Property names P, Q, R, ... for 1-based indices, wrapping past 26."""
    if index < 1:
        raise InputError("property indices start at 1")
    letter = _PROPERTY_LETTERS[(index - 1) % 26]
    round_ = (index - 1) // 26
    return letter if round_ == 0 else f"{letter}{round_}"


@dataclass(frozen=True)
class Clause:
    """One conjunct: variable has (or lacks) a property, maybe to a degree.

    ``degree`` is None in base mode. When present, a degree >= 0.5 reads as
    asserted and < 0.5 as negated; it must agree with the symbolic polarity.
    """

    variable: str
    prop: str
    negated: bool
    degree: float | None = None

    def __post_init__(self):
        if self.degree is not None:
            if not 0.0 <= self.degree <= 1.0:
                raise InputError(f"degree {self.degree} outside [0, 1]")
            if (self.degree >= 0.5) == self.negated:
                raise InputError(
                    f"degree {self.degree} crosses the polarity of "
                    f"{'!' if self.negated else ''}{self.prop}")

    @property
    def asserted(self) -> bool:
        """Effective polarity, thresholding fuzzy degrees at 0.5."""
        if self.degree is not None:
            return self.degree >= 0.5
        return not self.negated


def _format_degree(d: float) -> str:
    text = f"{d:.3f}".rstrip("0").rstrip(".")
    return text if text else "0"


def render_clause(clause: Clause) -> str:
    if clause.degree is None:
        return f"{clause.variable} is {'!' if clause.negated else ''}{clause.prop}"
    return f"{clause.variable} is {_format_degree(clause.degree)}*{clause.prop}"


def render_formula(clauses) -> str:
    return " AND ".join(render_clause(c) for c in clauses)


_CLAUSE_RE = re.compile(
    r"^(?P<var>[A-Za-z]\w*) is "
    r"(?:(?P<deg>\d+(?:\.\d+)?)\*(?P<fprop>[A-Za-z]\w*)"
    r"|(?P<neg>!)?(?P<prop>[A-Za-z]\w*))$")


def parse_formula(text: str) -> tuple[Clause, ...]:
    """Inverse of render_formula; raises FormulaParseError on bad input."""
    clauses = []
    for part in text.split(" AND "):
        m = _CLAUSE_RE.match(part.strip())
        if not m:
            raise FormulaParseError(f"cannot parse clause {part!r}")
        if m.group("deg") is not None:
            degree = float(m.group("deg"))
            if degree > 1.0:
                raise FormulaParseError(f"degree out of range in {part!r}")
            clauses.append(Clause(m.group("var"), m.group("fprop"),
                                  negated=degree < 0.5, degree=degree))
        else:
            clauses.append(Clause(m.group("var"), m.group("prop"),
                                  negated=m.group("neg") == "!"))
    if not clauses:
        raise FormulaParseError("empty formula")
    return tuple(clauses)


@dataclass(frozen=True)
class PropositionSet:
    """Per-vertex conjunctive formulas plus their canonical text form."""

    formulas: dict[str, tuple[Clause, ...]]
    variables: tuple[str, ...]
    properties: tuple[str, ...]
    regime: str
    provenance: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise InputError(f"unknown regime {self.regime!r}")
        fuzzy = self.regime != "base"
        for vertex, clauses in self.formulas.items():
            if not clauses:
                raise InputError(f"vertex {vertex!r} has an empty formula")
            seen = set()
            for c in clauses:
                if (c.degree is not None) != fuzzy:
                    raise InputError(
                        f"clause degree presence disagrees with regime "
                        f"{self.regime!r} on vertex {vertex!r}")
                key = (c.variable, c.prop)
                if key in seen:
                    raise InputError(
                        f"duplicate clause for {key} on vertex {vertex!r}")
                seen.add(key)

    def rendered(self) -> dict[str, str]:
        return {v: render_formula(cs) for v, cs in sorted(self.formulas.items())}

    def vertices(self) -> tuple[str, ...]:
        return tuple(sorted(self.formulas))

    def to_json_dict(self) -> dict:
        return {
            "regime": self.regime,
            "variables": list(self.variables),
            "properties": list(self.properties),
            "formulas": {
                v: [{"variable": c.variable, "property": c.prop,
                     "negated": c.negated, "degree": c.degree}
                    for c in cs]
                for v, cs in sorted(self.formulas.items())
            },
            "rendered": self.rendered(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PropositionSet":
        formulas = {
            v: tuple(Clause(c["variable"], c["property"], c["negated"],
                            c.get("degree"))
                     for c in cs)
            for v, cs in data["formulas"].items()
        }
        return cls(formulas, tuple(data["variables"]),
                   tuple(data["properties"]), data["regime"])


def render(propositions: PropositionSet) -> dict[str, str]:
    """Canonical text of every formula, keyed by vertex."""
    return propositions.rendered()


def _coerce_clauses(formula) -> tuple[Clause, ...]:
    if isinstance(formula, str):
        return parse_formula(formula)
    clauses = tuple(formula)
    if not all(isinstance(c, Clause) for c in clauses):
        raise FormulaParseError("expected a string or an iterable of Clause")
    return clauses


def consistency_oracle(p1, p2) -> int:
    """Pairwise consistency of two formulas: -1, 0, or +1.

    0 when the formulas share no variable; -1 when some shared variable
    carries the same property with opposite effective polarity; +1 otherwise.
    Accepts Clause sequences or rendered text.
    """
    c1 = _coerce_clauses(p1)
    c2 = _coerce_clauses(p2)
    vars1 = {c.variable for c in c1}
    vars2 = {c.variable for c in c2}
    if not vars1 & vars2:
        return 0
    polarity1 = {(c.variable, c.prop): c.asserted for c in c1}
    for c in c2:
        key = (c.variable, c.prop)
        if key in polarity1 and polarity1[key] != c.asserted:
            return -1
    return 1


@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    mismatches: tuple[tuple[tuple[str, str], int, int], ...]


def verify_model(graph: SignedCoherenceGraph,
                 propositions: PropositionSet) -> VerifyReport:
    """Check that the oracle reproduces the graph's sign structure exactly.

    Every unordered vertex pair must evaluate to the edge's weight sign
    (0 for non-edges).
    """
    if set(propositions.formulas) != graph.vertex_set:
        raise InputError("proposition set does not cover the graph's vertices")
    mismatches = []
    for u, v in all_vertex_pairs(graph.vertices):
        w = graph.weight(u, v)
        expected = 0 if w == 0 else (1 if w > 0 else -1)
        got = consistency_oracle(propositions.formulas[u],
                                 propositions.formulas[v])
        if got != expected:
            mismatches.append(((u, v), expected, got))
    return VerifyReport(not mismatches, tuple(mismatches))


def model_coherence_graph(graph: SignedCoherenceGraph,
                          cover_method: str = "percolation",
                          sfd_method: str = "greedy",
                          seed=None) -> PropositionSet:
    """Synthesize a proposition set that models a graph with +/-1 weights.

    One variable per clique of the chosen edge cover. Within each clique,
    the negative edges are decomposed into star forests; the k-th forest
    contributes property k, asserted at star roots and negated at leaves.
    Clique vertices untouched by negative edges share the next property
    index so every co-clique pair stays oracle-visible. Vertices left with
    empty formulas (isolated vertices) get a fresh variable of their own.
    """
    for _, _, w in graph.edges():
        if w not in (-1.0, 1.0):
            raise InputError("modeling requires weights in {-1, +1}")
    cover = covers.clique_edge_cover(graph, cover_method)
    formulas: dict[str, list[Clause]] = {v: [] for v in graph.vertices}
    used_indices: set[int] = set()
    sfd_provenance = []
    for j, clique in enumerate(cover.cliques, start=1):
        var = f"q{j}"
        members = sorted(clique)
        negatives = [(u, v) for u, v in all_vertex_pairs(members)
                     if graph.weight(u, v) < 0]
        method = sfd_method
        try:
            sfd = covers.star_forest_decompose(
                negatives, sfd_method, seed=f"{seed}|{j}")
        except InputError:
            # brute bails out on oversized components; greedy always applies
            method = "greedy-fallback"
            sfd = covers.star_forest_decompose(negatives, "greedy")
        touched: set[str] = set()
        for k, stars in enumerate(sfd.stars, start=1):
            sym = property_symbol(k)
            used_indices.add(k)
            for star in stars:
                formulas[star.root].append(Clause(var, sym, negated=False))
                touched.add(star.root)
                for leaf in star.leaves:
                    formulas[leaf].append(Clause(var, sym, negated=True))
                    touched.add(leaf)
        untouched = [v for v in members if v not in touched]
        if untouched:
            index = max(len(sfd.forests), 1) + 1
            used_indices.add(index)
            sym = property_symbol(index)
            for v in untouched:
                formulas[v].append(Clause(var, sym, negated=False))
        sfd_provenance.append({
            "clique": members,
            "method": method,
            "fell_back": sfd.fell_back,
            "forests": [[list(e) for e in forest] for forest in sfd.forests],
            "roots": [[star.root for star in stars] for stars in sfd.stars],
        })
    next_var = len(cover.cliques)
    for v in sorted(graph.vertices):
        if not formulas[v]:
            next_var += 1
            used_indices.add(1)
            formulas[v].append(Clause(f"q{next_var}", property_symbol(1),
                                      negated=False))
    variables = tuple(f"q{i}" for i in range(1, next_var + 1))
    properties = tuple(property_symbol(i) for i in sorted(used_indices))
    result = PropositionSet(
        {v: tuple(cs) for v, cs in formulas.items()},
        variables, properties, "base",
        provenance={
            "cover": {"method": cover.method,
                      "cliques": [list(c) for c in cover.cliques]},
            "star_forests": sfd_provenance,
        })
    return result


def inject_uncertainty(propositions: PropositionSet, regime: str,
                       seed=None) -> PropositionSet:
    """Attach fuzzy degrees drawn from a regime's bands to a base-mode set.

    Asserted clauses sample from the asserted band, negated from the negated
    band; the zero regime pins 1.0 and 0.0 exactly. Degrees are rounded to
    three decimals and clamped so the 0.5 polarity threshold is never crossed.
    """
    if propositions.regime != "base":
        raise InputError("uncertainty injection expects a base-mode set")
    if regime not in UNCERTAINTY_BANDS:
        raise InputError(f"unknown uncertainty regime {regime!r}")
    (alo, ahi), (nlo, nhi) = UNCERTAINTY_BANDS[regime]
    rng = random.Random(seed)
    new_formulas = {}
    for vertex in sorted(propositions.formulas):
        clauses = []
        for c in propositions.formulas[vertex]:
            lo, hi = (nlo, nhi) if c.negated else (alo, ahi)
            degree = round(rng.uniform(lo, hi), 3)
            degree = min(degree, 0.499) if c.negated else max(degree, 0.5)
            clauses.append(replace(c, degree=degree))
        new_formulas[vertex] = tuple(clauses)
    return PropositionSet(new_formulas, propositions.variables,
                          propositions.properties, regime,
                          provenance=propositions.provenance)
