"""Consistency of final-answer expressions across a trace set."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations

from ..errors import DegenerateSampleError, DomainError, EvaluationError, ParseError
from ..traces import TraceSet
from .algebra import Verdict, algebraic_equivalence
from .expr import parse_expr
from .ted import tree_similarity

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SymbolicScore:
    tree_similarity: float
    algebraic_equivalence: float
    lam: float
    combined: float
    domain_caveat: bool
    excluded: tuple = ()


def answer_expression(answer: str):
    """Parse a final answer; ``y = <expr>`` keeps only the right-hand side."""
    if answer.count("=") == 1:
        answer = answer.split("=")[1]
    return parse_expr(answer)


def sc_symbolic(traces: TraceSet, lam: float = 0.5, points: int = 12, seed: int = 0) -> SymbolicScore:
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    asts = []
    excluded = []
    for t in traces.traces:
        try:
            asts.append(answer_expression(t.final_answer))
        except ParseError as exc:
            log.warning("trace %s: final answer not parseable (%s); excluded", t.trace_id, exc)
            excluded.append(t.trace_id)
    if len(asts) < 2:
        raise DegenerateSampleError(f"need two parseable answers, have {len(asts)}")
    pairs = list(combinations(asts, 2))
    ts = sum(tree_similarity(a, b) for a, b in pairs) / len(pairs)
    equivalent = 0
    caveat = False
    for a, b in pairs:
        try:
            v = algebraic_equivalence(a, b, points=points, seed=seed)
        except EvaluationError as exc:
            log.warning("equivalence undecidable for a pair (%s); counted as not equivalent", exc)
            continue
        if v.holds:
            equivalent += 1
        caveat |= v is Verdict.EQUIVALENT_WITH_DOMAIN_CAVEAT
    ae = equivalent / len(pairs)
    return SymbolicScore(ts, ae, lam, lam * ts + (1 - lam) * ae, caveat, tuple(excluded))
