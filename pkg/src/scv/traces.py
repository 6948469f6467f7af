"""Trace and reasoning-graph data model, plus the JSON trace-set document format.

A trace-set document looks like::

    {
      "query": "Prove that ...",
      "domain": "theorem",
      "traces": [
        {
          "trace_id": "t1",
          "final_answer": "Q",
          "statements": [{"id": "s1", "text": "P", "kind": "claim"}, ...],
          "edges": [{"from": "s1", "to": "s2"}, ...]
        }
      ]
    }

Statements may additionally carry ``canonical``, ``value`` (numeric kind),
``rule`` and ``premises`` (theorem annotations).
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import CycleError, DanglingEdgeError, SchemaError

KINDS = ("claim", "expression", "numeric")
DOMAINS = ("theorem", "symbolic", "numeric", "generic")
RULES = (
    "modus_ponens",
    "and_intro",
    "and_elim",
    "or_intro",
    "substitution_of_equals",
    "hypothesis",
    "arithmetic_fact",
    "unknown",
)

_SET_FIELDS = {"query", "domain", "traces"}
_TRACE_FIELDS = {"trace_id", "final_answer", "statements", "edges", "query"}
_STATEMENT_FIELDS = {"id", "text", "kind", "canonical", "value", "rule", "premises"}
_EDGE_FIELDS = {"from", "to"}


@dataclass(frozen=True)
class Statement:
    id: str
    text: str
    kind: str = "claim"
    canonical: str | None = None
    value: float | None = None
    rule: str | None = None
    premises: tuple[str, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise SchemaError("statement id must be a non-empty string")
        if self.kind not in KINDS:
            raise SchemaError(f"statement {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == "numeric" and self.value is None:
            raise SchemaError(f"statement {self.id!r}: numeric statement needs a value")
        if self.rule is not None and self.rule not in RULES:
            raise SchemaError(f"statement {self.id!r}: unknown rule {self.rule!r}")


@dataclass(frozen=True)
class ReasoningTrace:
    trace_id: str
    query: str
    statements: tuple[Statement, ...]
    edges: tuple[tuple[str, str], ...]
    final_answer: str

    def __post_init__(self):
        object.__setattr__(self, "statements", tuple(self.statements))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        validate_trace(self)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.statements)

    def statement(self, sid: str) -> Statement:
        for s in self.statements:
            if s.id == sid:
                return s
        raise KeyError(sid)


@dataclass(frozen=True)
class TraceSet:
    query: str
    traces: tuple[ReasoningTrace, ...]
    domain: str = "generic"

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        if self.domain not in DOMAINS:
            raise SchemaError(f"unknown domain {self.domain!r}")
        if len(self.traces) < 1:
            raise SchemaError("a trace set needs at least one trace")
        seen = set()
        for t in self.traces:
            if t.query != self.query:
                raise SchemaError(f"trace {t.trace_id!r} answers a different query")
            if t.trace_id in seen:
                raise SchemaError(f"duplicate trace_id {t.trace_id!r}")
            seen.add(t.trace_id)

    @property
    def k(self) -> int:
        return len(self.traces)

    def trace(self, trace_id: str) -> ReasoningTrace:
        for t in self.traces:
            if t.trace_id == trace_id:
                return t
        raise KeyError(trace_id)

    def replace(self, trace: ReasoningTrace) -> "TraceSet":
        """Return a copy with the trace of the same id swapped for ``trace``."""
        traces = [trace if t.trace_id == trace.trace_id else t for t in self.traces]
        return TraceSet(self.query, tuple(traces), self.domain)


@dataclass(frozen=True)
class ReasoningGraph:
    trace_id: str
    vertices: tuple[Statement, ...]
    edges: frozenset
    order: tuple[str, ...]
    parents: Mapping[str, tuple[str, ...]] = field(repr=False)
    children: Mapping[str, tuple[str, ...]] = field(repr=False)

    def __len__(self):
        return len(self.vertices)

    def vertex(self, sid: str) -> Statement:
        for v in self.vertices:
            if v.id == sid:
                return v
        raise KeyError(sid)


def _topological_order(ids: Sequence[str], edges: Iterable[tuple[str, str]]):
    """Kahn's algorithm; ties resolved by input order. Returns None on a cycle."""
    position = {sid: i for i, sid in enumerate(ids)}
    indeg = {sid: 0 for sid in ids}
    out = {sid: [] for sid in ids}
    for u, v in edges:
        out[u].append(v)
        indeg[v] += 1
    ready = sorted((sid for sid in ids if indeg[sid] == 0), key=position.__getitem__)
    ready = deque(ready)
    order = []
    while ready:
        u = ready.popleft()
        order.append(u)
        released = []
        for v in out[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                released.append(v)
        # keep the queue sorted by input position for a stable order
        merged = sorted(list(ready) + released, key=position.__getitem__)
        ready = deque(merged)
    if len(order) != len(ids):
        return None
    return tuple(order)


def _find_cycle_edge(ids, edges):
    """Return one edge lying on a cycle (DFS back edge)."""
    out = {sid: [] for sid in ids}
    for u, v in edges:
        out[u].append(v)
    color = dict.fromkeys(ids, 0)
    for root in ids:
        if color[root]:
            continue
        stack = [(root, iter(out[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
            elif color[nxt] == 1:
                return (node, nxt)
            elif color[nxt] == 0:
                color[nxt] = 1
                stack.append((nxt, iter(out[nxt])))
    return None


def validate_trace(trace: ReasoningTrace) -> None:
    ids = [s.id for s in trace.statements]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise SchemaError(f"trace {trace.trace_id!r}: duplicate statement id {dup!r}")
    known = set(ids)
    seen_edges = set()
    for u, v in trace.edges:
        if u not in known or v not in known:
            raise DanglingEdgeError(
                f"trace {trace.trace_id!r}: edge {u}->{v} references an unknown statement",
                edge=(u, v),
            )
        if u == v:
            raise CycleError(f"trace {trace.trace_id!r}: self-loop on {u!r}", edge=(u, v))
        if (u, v) in seen_edges:
            raise SchemaError(f"trace {trace.trace_id!r}: duplicate edge {u}->{v}")
        seen_edges.add((u, v))
    if _topological_order(ids, trace.edges) is None:
        u, v = _find_cycle_edge(ids, trace.edges)
        raise CycleError(f"trace {trace.trace_id!r}: edge {u}->{v} closes a cycle", edge=(u, v))


def build_graph(trace: ReasoningTrace) -> ReasoningGraph:
    ids = trace.ids
    order = _topological_order(ids, trace.edges)
    parents = {sid: [] for sid in ids}
    children = {sid: [] for sid in ids}
    for u, v in trace.edges:
        parents[v].append(u)
        children[u].append(v)
    return ReasoningGraph(
        trace_id=trace.trace_id,
        vertices=trace.statements,
        edges=frozenset(trace.edges),
        order=order,
        parents={k: tuple(v) for k, v in parents.items()},
        children={k: tuple(v) for k, v in children.items()},
    )


# -- document (de)serialization ---------------------------------------------


def _check_fields(obj, allowed, required, where, strict):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    missing = [f for f in required if f not in obj]
    if missing:
        raise SchemaError(f"{where}: missing field(s) {', '.join(missing)}")
    if strict:
        unknown = sorted(set(obj) - allowed)
        if unknown:
            raise SchemaError(f"{where}: unknown field(s) {', '.join(unknown)}")


def _expect(value, types, where):
    if not isinstance(value, types) or isinstance(value, bool):
        raise SchemaError(f"{where}: wrong type {type(value).__name__}")
    return value


def statement_from_dict(obj, where="statement", strict=True) -> Statement:
    _check_fields(obj, _STATEMENT_FIELDS, ("id", "text", "kind"), where, strict)
    value = obj.get("value")
    if value is not None:
        value = float(_expect(value, (int, float), f"{where}.value"))
        if not math.isfinite(value):
            raise SchemaError(f"{where}.value must be finite")
    premises = obj.get("premises")
    if premises is not None:
        _expect(premises, list, f"{where}.premises")
        premises = tuple(_expect(p, str, f"{where}.premises") for p in premises)
    canonical = obj.get("canonical")
    if canonical is not None:
        _expect(canonical, str, f"{where}.canonical")
    rule = obj.get("rule")
    if rule is not None:
        _expect(rule, str, f"{where}.rule")
    return Statement(
        id=_expect(obj["id"], str, f"{where}.id"),
        text=_expect(obj["text"], str, f"{where}.text"),
        kind=_expect(obj["kind"], str, f"{where}.kind"),
        canonical=canonical,
        value=value,
        rule=rule,
        premises=premises,
    )


def trace_from_dict(obj, query: str, where="trace", strict=True) -> ReasoningTrace:
    _check_fields(obj, _TRACE_FIELDS, ("trace_id", "final_answer", "statements", "edges"), where, strict)
    if "query" in obj and obj["query"] != query:
        raise SchemaError(f"{where}: query differs from the trace set's query")
    stmts = _expect(obj["statements"], list, f"{where}.statements")
    edges = []
    for j, e in enumerate(_expect(obj["edges"], list, f"{where}.edges")):
        _check_fields(e, _EDGE_FIELDS, ("from", "to"), f"{where}.edges[{j}]", strict)
        edges.append((_expect(e["from"], str, f"{where}.edges[{j}].from"),
                      _expect(e["to"], str, f"{where}.edges[{j}].to")))
    return ReasoningTrace(
        trace_id=_expect(obj["trace_id"], str, f"{where}.trace_id"),
        query=query,
        statements=tuple(
            statement_from_dict(s, f"{where}.statements[{i}]", strict) for i, s in enumerate(stmts)
        ),
        edges=tuple(edges),
        final_answer=_expect(obj["final_answer"], str, f"{where}.final_answer"),
    )


def parse_trace_set(document: bytes | str, strict: bool = True) -> TraceSet:
    """Parse and validate a trace-set JSON document."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"document is not valid UTF-8: {exc}") from None
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc}") from None
    _check_fields(obj, _SET_FIELDS, ("query", "domain", "traces"), "document", strict)
    query = _expect(obj["query"], str, "query")
    domain = _expect(obj["domain"], str, "domain")
    traces = _expect(obj["traces"], list, "traces")
    return TraceSet(
        query=query,
        traces=tuple(trace_from_dict(t, query, f"traces[{i}]", strict) for i, t in enumerate(traces)),
        domain=domain,
    )


def statement_to_dict(s: Statement) -> dict:
    out = {"id": s.id, "text": s.text, "kind": s.kind}
    if s.canonical is not None:
        out["canonical"] = s.canonical
    if s.value is not None:
        out["value"] = s.value
    if s.rule is not None:
        out["rule"] = s.rule
    if s.premises is not None:
        out["premises"] = list(s.premises)
    return out


def trace_to_dict(t: ReasoningTrace) -> dict:
    return {
        "trace_id": t.trace_id,
        "final_answer": t.final_answer,
        "statements": [statement_to_dict(s) for s in t.statements],
        "edges": [{"from": u, "to": v} for u, v in t.edges],
    }


def trace_set_to_dict(ts: TraceSet) -> dict:
    return {
        "query": ts.query,
        "domain": ts.domain,
        "traces": [trace_to_dict(t) for t in ts.traces],
    }


def serialize_trace_set(ts: TraceSet) -> bytes:
    return json.dumps(trace_set_to_dict(ts), indent=2, ensure_ascii=False).encode("utf-8")
