"""Replace low-consistency statements of one trace with consistent material
drawn from the rest of the sample set."""

from __future__ import annotations

from .consistency import ConsistencyReport
from .equivalence import SimilarityProvider
from .errors import DomainError, IrreparableError
from .traces import ReasoningTrace, Statement, TraceSet, build_graph


def _neighbour_classes(traces: TraceSet, class_of):
    """(trace_id, sid) -> (parent classes, child classes)."""
    out = {}
    for t in traces.traces:
        g = build_graph(t)
        for sid in g.order:
            ps = frozenset(class_of[(t.trace_id, p)] for p in g.parents[sid])
            cs = frozenset(class_of[(t.trace_id, c)] for c in g.children[sid])
            out[(t.trace_id, sid)] = (ps, cs)
    return out


def _jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def _reroute(statements, edges, removed):
    """Drop ``removed`` vertices, linking each kept parent to each kept descendant
    that was reachable only through removed vertices."""
    children = {s.id: [] for s in statements}
    for u, v in edges:
        children[u].append(v)
    kept = [s.id for s in statements if s.id not in removed]
    new_edges = []
    seen = set()
    for u in kept:
        stack = list(children[u])
        visited = set()
        while stack:
            v = stack.pop(0)
            if v in visited:
                continue
            visited.add(v)
            if v in removed:
                stack.extend(children[v])
            elif (u, v) not in seen:
                seen.add((u, v))
                new_edges.append((u, v))
    order = {e: i for i, e in enumerate(edges)}
    return tuple(sorted(new_edges, key=lambda e: (order.get(e, len(order)), e)))


def repair_trace(target: ReasoningTrace, traces: TraceSet, report: ConsistencyReport, threshold: float = 0.5,
                 provider: SimilarityProvider | None = None) -> ReasoningTrace:
    """Repair ``target`` using classes scored in ``report``.

    Each statement scoring below ``threshold`` is swapped for the
    representative of a class that is absent from the target, scores at
    least ``threshold``, and has the highest affinity to the statement
    (content similarity plus overlap of neighbouring classes); ties go to the
    higher-scoring class, then the smaller representative. Statements with no
    such candidate are removed and their dependencies re-routed.
    """
    if not 0.0 <= threshold <= 1.0:
        raise DomainError(f"repair threshold must lie in [0, 1], got {threshold}")
    provider = provider or SimilarityProvider()
    alignment = report.alignment
    if alignment is None:
        raise DomainError("report carries no alignment")
    class_of = alignment.class_of
    tid = target.trace_id
    score = report.per_statement

    low = [s for s in target.statements if score[class_of[(tid, s.id)]] < threshold]
    if not low:
        return target

    present = {class_of[(tid, s.id)] for s in target.statements}
    candidates = sorted(rep for rep, sc in score.items() if sc >= threshold and rep not in present)
    context = _neighbour_classes(traces, class_of)

    def affinity(s: Statement, rep) -> float:
        ps, cs = context[(tid, s.id)]
        best = 0.0
        for member in alignment.members(rep):
            if member[0] == tid:
                continue
            sim = provider.similarity(s, alignment.statements[member])
            mp, mc = context[member]
            best = max(best, sim + _jaccard(ps, mp) + _jaccard(cs, mc))
        return best

    order = {sid: i for i, sid in enumerate(build_graph(target).order)}
    replacements = {}
    used = set()
    for s in sorted(low, key=lambda s: order[s.id]):
        scored = [(affinity(s, rep), score[rep], rep) for rep in candidates if rep not in used]
        scored = [c for c in scored if c[0] > 0.0]
        if not scored:
            continue
        # candidates are sorted, so max keeps the smallest representative on ties
        _, _, rep = max(scored, key=lambda c: (c[0], c[1]))
        used.add(rep)
        src = alignment.representative_statement(rep)
        replacements[s.id] = Statement(
            s.id, src.text, src.kind, canonical=src.canonical, value=src.value, rule=src.rule,
            premises=None,
        )

    removed = {s.id for s in low if s.id not in replacements}
    if len(removed) == len(target.statements):
        raise IrreparableError(f"every statement of trace {tid!r} is below {threshold} with no replacement")
    statements = tuple(replacements.get(s.id, s) for s in target.statements if s.id not in removed)
    edges = _reroute(target.statements, target.edges, removed) if removed else target.edges
    return ReasoningTrace(tid, target.query, statements, edges, target.final_answer)
