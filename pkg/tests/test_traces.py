import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scv.errors import CycleError, DanglingEdgeError, SchemaError
from scv.traces import (
    ReasoningTrace,
    Statement,
    TraceSet,
    build_graph,
    parse_trace_set,
    serialize_trace_set,
)

from oracles import random_trace_set


def doc(traces, query="q", domain="generic"):
    return json.dumps({"query": query, "domain": domain, "traces": traces})


def trace(tid, stmts, edges, answer="1"):
    return {
        "trace_id": tid,
        "final_answer": answer,
        "statements": [{"id": s, "text": f"text {s}", "kind": "claim"} for s in stmts],
        "edges": [{"from": a, "to": b} for a, b in edges],
    }


def test_single_trace_round_trip():
    ts = parse_trace_set(doc([trace("t1", ["a", "b"], [("a", "b")])]))
    assert ts.k == 1
    assert ts.traces[0].edges == (("a", "b"),)
    assert parse_trace_set(serialize_trace_set(ts)) == ts


def test_two_cycle_rejected():
    with pytest.raises(CycleError) as err:
        parse_trace_set(doc([trace("t1", ["a", "b"], [("a", "b"), ("b", "a")])]))
    assert err.value.edge in {("a", "b"), ("b", "a")}
    assert "->" in str(err.value)


def test_long_cycle_names_a_cycle_edge():
    edges = [("a", "b"), ("b", "c"), ("c", "d"), ("d", "b")]
    with pytest.raises(CycleError) as err:
        parse_trace_set(doc([trace("t1", ["a", "b", "c", "d"], edges)]))
    assert err.value.edge in {("b", "c"), ("c", "d"), ("d", "b")}


def test_dangling_edge():
    with pytest.raises(DanglingEdgeError) as err:
        parse_trace_set(doc([trace("t1", ["a"], [("a", "z")])]))
    assert err.value.edge == ("a", "z")


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("query"),
        lambda d: d.update(domain="chemistry"),
        lambda d: d.update(traces=[]),
        lambda d: d["traces"][0].update(extra=1),
        lambda d: d["traces"][0]["statements"][0].update(kind="poem"),
        lambda d: d["traces"][0]["statements"].append(dict(d["traces"][0]["statements"][0])),
        lambda d: d["traces"][0]["edges"].append(dict(d["traces"][0]["edges"][0])),
        lambda d: d["traces"][0].update(trace_id=3),
        lambda d: d["traces"].append(dict(d["traces"][0])),
        lambda d: d["traces"][0]["statements"][0].update(id=""),
    ],
)
def test_schema_errors(mutate):
    d = json.loads(doc([trace("t1", ["a", "b"], [("a", "b")])]))
    mutate(d)
    with pytest.raises(SchemaError):
        parse_trace_set(json.dumps(d))


def test_self_loop_is_a_cycle():
    with pytest.raises(CycleError):
        parse_trace_set(doc([trace("t1", ["a"], [("a", "a")])]))


def test_numeric_requires_value():
    with pytest.raises(SchemaError):
        Statement("a", "42", "numeric")


def test_malformed_json_and_bytes():
    with pytest.raises(SchemaError):
        parse_trace_set(b"{not json")
    ts = parse_trace_set(doc([trace("t1", ["a"], [])]).encode("utf-8"))
    assert ts.k == 1


def test_lenient_ignores_unknown_fields():
    d = json.loads(doc([trace("t1", ["a", "b"], [("a", "b")])]))
    d["producer"] = "x"
    d["traces"][0]["statements"][0]["confidence"] = 0.3
    with pytest.raises(SchemaError):
        parse_trace_set(json.dumps(d))
    assert parse_trace_set(json.dumps(d), strict=False).k == 1


def test_mismatched_query_rejected():
    d = json.loads(doc([trace("t1", ["a"], [])]))
    d["traces"][0]["query"] = "other"
    with pytest.raises(SchemaError):
        parse_trace_set(json.dumps(d))


def _trace(stmts, edges):
    return ReasoningTrace("t", "q", tuple(Statement(s, s, "claim") for s in stmts), tuple(edges), "x")


def test_build_graph_chain():
    g = build_graph(_trace(["c", "a", "b"], [("a", "b"), ("b", "c")]))
    assert g.order == ("a", "b", "c")


def test_build_graph_no_edges_keeps_input_order():
    g = build_graph(_trace(["z", "x", "y"], []))
    assert g.order == ("z", "x", "y")


def test_build_graph_diamond():
    g = build_graph(_trace(["d", "c", "b", "a"], [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]))
    assert g.order[0] == "a" and g.order[-1] == "d"
    assert g.parents["d"] == ("c", "b") or set(g.parents["d"]) == {"b", "c"}
    assert len(g) == 4 and len(g.edges) == 4


def test_trace_set_replace_and_lookup():
    ts = TraceSet("q", (_trace(["a"], []),), "generic")
    assert ts.trace("t").trace_id == "t"
    with pytest.raises(KeyError):
        ts.trace("missing")


def test_randomized_graphs_are_topologically_ordered():
    rng = np.random.default_rng(0)
    for _ in range(100):
        ts = random_trace_set(rng)
        for t in ts.traces:
            g = build_graph(t)
            pos = {v: i for i, v in enumerate(g.order)}
            assert len(g.order) == len(t.statements)
            assert g.edges == frozenset(t.edges)
            assert all(pos[a] < pos[b] for a, b in g.edges)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_round_trip_property(seed):
    ts = random_trace_set(np.random.default_rng(seed))
    again = parse_trace_set(serialize_trace_set(ts))
    assert again == ts
    assert serialize_trace_set(again) == serialize_trace_set(ts)
