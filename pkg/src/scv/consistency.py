"""Hierarchical self-consistency scores.

* statement level: fraction of traces containing a member of a class
* edge level: fraction of traces containing an edge between two classes
* graph level (``psi``): mean pairwise structural agreement
* answer level (``phi``): one minus normalized entropy of final answers
* combined (``lambda``): ``alpha * psi + (1 - alpha) * phi``
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

from .equivalence import AlignmentMap, SimilarityProvider, align
from .errors import DegenerateSampleError, DomainError
from .iso import DEFAULT_EXACT_CAP, iso
from .traces import ReasoningTrace, Statement, TraceSet, build_graph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoringConfig:
    alpha: float = 0.5
    flag_threshold: float = 0.5
    provider: SimilarityProvider = field(default_factory=SimilarityProvider)
    iso_method: str = "auto"
    iso_cap: int = DEFAULT_EXACT_CAP
    seed: int = 0

    def __post_init__(self):
        _unit("alpha", self.alpha)
        _unit("flag threshold", self.flag_threshold)
        if self.iso_method not in ("exact", "spectral", "auto"):
            raise DomainError(f"unknown iso method {self.iso_method!r}")
        if self.iso_cap < 0:
            raise DomainError("iso exact cap must be non-negative")


def _unit(name, x):
    if not (isinstance(x, (int, float)) and 0.0 <= x <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {x}")


@dataclass(frozen=True)
class ConsistencyReport:
    per_statement: dict  # class representative -> score
    per_edge: dict  # (rep_i, rep_j) -> score
    global_: float
    entropy: float
    combined: float
    alpha: float
    flagged: frozenset
    degenerate: bool = False
    alignment: AlignmentMap | None = field(default=None, repr=False, compare=False)

    def statement_score(self, trace_id: str, statement_id: str) -> float:
        return self.per_statement[self.alignment.class_of[(trace_id, statement_id)]]

    def mean_atomic(self, trace: ReasoningTrace) -> float:
        if not trace.statements:
            return 0.0
        return sum(self.statement_score(trace.trace_id, s.id) for s in trace.statements) / len(
            trace.statements
        )

    def to_dict(self) -> dict:
        return {
            "global": self.global_,
            "entropy": self.entropy,
            "combined": self.combined,
            "alpha": self.alpha,
            "degenerate": self.degenerate,
            "per_statement": [
                {"class": _key(rep), "score": s, "flagged": rep in self.flagged}
                for rep, s in sorted(self.per_statement.items())
            ],
            "per_edge": [
                {"from": _key(a), "to": _key(b), "score": s}
                for (a, b), s in sorted(self.per_edge.items())
            ],
            "flagged": sorted(_key(r) for r in self.flagged),
        }

    def csv_rows(self):
        rows = [("level", "key", "score", "flagged")]
        for rep, s in sorted(self.per_statement.items()):
            rows.append(("statement", _key(rep), _fmt(s), str(rep in self.flagged).lower()))
        for (a, b), s in sorted(self.per_edge.items()):
            rows.append(("edge", f"{_key(a)}->{_key(b)}", _fmt(s), "false"))
        rows.append(("global", "psi", _fmt(self.global_), "false"))
        rows.append(("entropy", "phi", _fmt(self.entropy), "false"))
        rows.append(("combined", "lambda", _fmt(self.combined), "false"))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.csv_rows())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _key(rep) -> str:
    return f"{rep[0]}/{rep[1]}"


def _fmt(x: float) -> str:
    return repr(float(x))


def sc_atomic(members, traces: TraceSet) -> float:
    """Fraction of traces that contain at least one member of the class."""
    present = {tid for tid, _ in members}
    return sum(1 for t in traces.traces if t.trace_id in present) / traces.k


def sc_logical(members_i, members_j, traces: TraceSet) -> float:
    """Fraction of traces with an edge from a member of class i to one of class j."""
    by_trace_i, by_trace_j = {}, {}
    for tid, sid in members_i:
        by_trace_i.setdefault(tid, set()).add(sid)
    for tid, sid in members_j:
        by_trace_j.setdefault(tid, set()).add(sid)
    count = 0
    for t in traces.traces:
        src, dst = by_trace_i.get(t.trace_id), by_trace_j.get(t.trace_id)
        if src and dst and any(u in src and v in dst for u, v in t.edges):
            count += 1
    return count / traces.k


def psi_global(traces: TraceSet, alignment: AlignmentMap | None = None, config: ScoringConfig | None = None,
               iso_fn=None) -> float:
    """Mean structural agreement over all unordered trace pairs."""
    config = config or ScoringConfig()
    if traces.k < 2:
        raise DegenerateSampleError("structural agreement needs at least two traces")
    alignment = alignment or align(traces, config.provider)
    graphs = [build_graph(t) for t in traces.traces]
    labels = [alignment.labels(t.trace_id) for t in traces.traces]
    if iso_fn is None:
        def iso_fn(g1, g2, l1, l2):
            return iso(g1, g2, config.provider, l1, l2, method=config.iso_method,
                       cap=config.iso_cap, seed=config.seed)
    total = 0.0
    for i, j in combinations(range(traces.k), 2):
        total += iso_fn(graphs[i], graphs[j], labels[i], labels[j]).score
    return total / (traces.k * (traces.k - 1) / 2)


def answer_statement(answer: str, domain: str) -> Statement:
    if domain == "symbolic":
        return Statement("answer", answer, "expression")
    try:
        value = float(answer)
    except ValueError:
        return Statement("answer", answer, "claim")
    if math.isfinite(value):
        return Statement("answer", answer, "numeric", value=value)
    return Statement("answer", answer, "claim")


def answer_clusters(traces: TraceSet, provider: SimilarityProvider | None = None) -> list:
    """Cluster index per trace, grouping equivalent final answers."""
    provider = provider or SimilarityProvider()
    stmts = [answer_statement(t.final_answer, traces.domain) for t in traces.traces]
    labels = list(range(len(stmts)))

    def find(i):
        while labels[i] != i:
            labels[i] = labels[labels[i]]
            i = labels[i]
        return i

    for i, j in combinations(range(len(stmts)), 2):
        if find(i) != find(j) and provider.similarity(stmts[i], stmts[j]) >= provider.threshold:
            labels[max(find(i), find(j))] = min(find(i), find(j))
    return [find(i) for i in range(len(stmts))]


def entropy_score(cluster_sizes, k: int) -> float:
    """``1 - H / ln k`` for a partition of ``k`` responses into clusters."""
    if k < 2:
        raise DegenerateSampleError("entropy score needs at least two responses")
    h = -sum((c / k) * math.log(c / k) for c in cluster_sizes if c > 0)
    return min(1.0, max(0.0, 1.0 - h / math.log(k)))


def phi_entropy(traces: TraceSet, provider: SimilarityProvider | None = None) -> float:
    sizes = Counter(answer_clusters(traces, provider)).values()
    return entropy_score(sizes, traces.k)


def lambda_combined(psi: float, phi: float, alpha: float) -> float:
    _unit("psi", psi)
    _unit("phi", phi)
    _unit("alpha", alpha)
    return alpha * psi + (1 - alpha) * phi


def full_report(traces: TraceSet, config: ScoringConfig | None = None, degenerate: str = "raise") -> ConsistencyReport:
    """Score a trace set at every level.

    With ``degenerate="mark"`` a single-trace set gets ``psi = phi = 1`` and
    ``degenerate=True`` instead of raising DegenerateSampleError.
    """
    config = config or ScoringConfig()
    alignment = align(traces, config.provider)
    per_statement = {c[0]: sc_atomic(c, traces) for c in alignment.classes}

    edge_pairs = set()
    for t in traces.traces:
        for u, v in t.edges:
            edge_pairs.add((alignment.class_of[(t.trace_id, u)], alignment.class_of[(t.trace_id, v)]))
    per_edge = {
        (a, b): sc_logical(alignment.members(a), alignment.members(b), traces) for a, b in sorted(edge_pairs)
    }

    is_degenerate = traces.k < 2
    if is_degenerate:
        if degenerate != "mark":
            raise DegenerateSampleError("a single sample has no pairwise or entropy statistics")
        log.warning("single trace: psi and phi reported as 1.0")
        psi = phi = 1.0
    else:
        psi = psi_global(traces, alignment, config)
        phi = phi_entropy(traces, config.provider)
    flagged = frozenset(rep for rep, s in per_statement.items() if s < config.flag_threshold)
    return ConsistencyReport(
        per_statement=per_statement,
        per_edge=per_edge,
        global_=psi,
        entropy=phi,
        combined=lambda_combined(psi, phi, config.alpha),
        alpha=config.alpha,
        flagged=flagged,
        degenerate=is_degenerate,
        alignment=alignment,
    )
