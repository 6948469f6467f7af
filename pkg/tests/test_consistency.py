import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scv.consistency import (
    ScoringConfig,
    entropy_score,
    full_report,
    lambda_combined,
    phi_entropy,
    psi_global,
    sc_atomic,
    sc_logical,
)
from scv.equivalence import SimilarityProvider, align
from scv.errors import DegenerateSampleError, DomainError
from scv.traces import ReasoningTrace, Statement, TraceSet

from oracles import brute_report, entropy, random_trace_set


def mk(tid, texts, edges=(), answer="a"):
    stmts = tuple(Statement(t, t, "claim") for t in texts)
    return ReasoningTrace(tid, "q", stmts, tuple(edges), answer)


def tset(*traces, domain="generic"):
    return TraceSet("q", tuple(traces), domain)


def class_members(ts, text):
    m = align(ts)
    for c in m.classes:
        if m.statements[c[0]].text == text:
            return c
    return ()


def test_atomic_unanimous_and_partial():
    ts = tset(*(mk(f"t{i}", ["p", "q"] if i < 3 else ["p"]) for i in range(4)))
    assert sc_atomic(class_members(ts, "p"), ts) == 1.0
    assert sc_atomic(class_members(ts, "q"), ts) == 0.75
    assert sc_atomic((), ts) == 0.0


def test_logical_scores():
    traces = [mk(f"t{i}", ["p", "q"], [("p", "q")] if i == 0 else []) for i in range(4)]
    ts = tset(*traces)
    assert sc_logical(class_members(ts, "p"), class_members(ts, "q"), ts) == 0.25
    full = tset(*(mk(f"t{i}", ["p", "q"], [("p", "q")]) for i in range(3)))
    assert sc_logical(class_members(full, "p"), class_members(full, "q"), full) == 1.0
    partial = tset(mk("t0", ["p", "q"], [("p", "q")]), mk("t1", ["q"]))
    assert sc_logical(class_members(partial, "p"), class_members(partial, "q"), partial) == 0.5


def test_psi_cases():
    same = tset(*(mk(f"t{i}", ["a", "b", "c"], [("a", "b"), ("b", "c")]) for i in range(3)))
    assert psi_global(same) == 1.0
    disjoint = tset(mk("t0", ["a", "b"]), mk("t1", ["c", "d"]))
    assert psi_global(disjoint) == 0.0
    chains = tset(mk("t0", ["a", "b", "c"], [("a", "b"), ("b", "c")]),
                  mk("t1", ["a", "b", "d"], [("a", "b"), ("b", "d")]))
    assert psi_global(chains) == 0.5
    with pytest.raises(DegenerateSampleError):
        psi_global(tset(mk("t0", ["a"])))


def test_phi_cases():
    assert phi_entropy(tset(*(mk(f"t{i}", ["a"], answer="7") for i in range(4)))) == 1.0
    assert phi_entropy(tset(*(mk(f"t{i}", ["a"], answer=f"w{i}") for i in range(4)))) == 0.0
    ts = tset(*(mk(f"t{i}", ["a"], answer=x) for i, x in enumerate("xxyz")))
    assert phi_entropy(ts) == pytest.approx(0.25, abs=1e-12)
    assert entropy_score([2, 1, 1], 4) == pytest.approx(1 - entropy([0.5, 0.25, 0.25]) / math.log(4), abs=1e-15)
    with pytest.raises(DegenerateSampleError):
        phi_entropy(tset(mk("t0", ["a"])))


def test_phi_groups_equivalent_numeric_answers():
    ts = tset(mk("t0", ["a"], answer="42"), mk("t1", ["a"], answer="42.0"), domain="numeric")
    assert phi_entropy(ts) == 1.0


def test_phi_permutation_invariant():
    traces = [mk(f"t{i}", ["a"], answer=x) for i, x in enumerate("aabbbc")]
    base = phi_entropy(tset(*traces))
    rng = np.random.default_rng(0)
    for _ in range(10):
        order = rng.permutation(len(traces))
        assert phi_entropy(tset(*(traces[i] for i in order))) == pytest.approx(base, abs=1e-15)


def test_lambda():
    assert lambda_combined(1.0, 1.0, 0.3) == 1.0
    assert lambda_combined(0.5, 0.25, 0.5) == 0.375
    assert lambda_combined(0.9, 0.2, 0.0) == 0.2
    for bad in [(1.5, 0.2, 0.5), (0.5, -0.1, 0.5), (0.5, 0.5, 2.0)]:
        with pytest.raises(DomainError):
            lambda_combined(*bad)


def test_full_report_identical():
    ts = tset(*(mk(f"t{i}", ["a", "b"], [("a", "b")]) for i in range(3)))
    r = full_report(ts)
    assert set(r.per_statement.values()) == {1.0} and set(r.per_edge.values()) == {1.0}
    assert (r.global_, r.entropy, r.combined) == (1.0, 1.0, 1.0)
    assert not r.flagged


def test_full_report_flags_unique_statement():
    traces = [mk(f"t{i}", ["a", "b"] + (["odd one"] if i == 4 else []), [("a", "b")]) for i in range(5)]
    r = full_report(tset(*traces))
    assert r.flagged == {("t4", "odd one")}
    assert r.per_statement[("t4", "odd one")] == pytest.approx(0.2)


def test_single_trace_policy():
    ts = tset(mk("t0", ["a"]))
    with pytest.raises(DegenerateSampleError):
        full_report(ts)
    r = full_report(ts, degenerate="mark")
    assert r.degenerate and r.global_ == r.entropy == r.combined == 1.0


def test_config_validation():
    with pytest.raises(DomainError):
        ScoringConfig(alpha=1.5)
    with pytest.raises(DomainError):
        ScoringConfig(flag_threshold=-0.1)
    with pytest.raises(DomainError):
        ScoringConfig(iso_method="fast")


def test_matches_bruteforce_reference():
    rng = np.random.default_rng(123)
    provider = SimilarityProvider()
    for _ in range(60):
        ts = random_trace_set(rng, min_k=2)
        r = full_report(ts)
        atomic, edge, psi, phi = brute_report(ts, provider)
        assert r.per_statement == atomic
        assert r.per_edge == edge
        assert r.global_ == psi and r.entropy == phi


def test_exports_are_consistent():
    ts = tset(mk("t0", ["a", "b"], [("a", "b")]), mk("t1", ["a", "c"], [("a", "c")], answer="b"))
    r = full_report(ts)
    rows = r.to_csv().splitlines()
    assert rows[0] == "level,key,score,flagged"
    assert len(rows) == 1 + len(r.per_statement) + len(r.per_edge) + 3
    assert '"combined"' in r.to_json()
    assert r.to_json() == full_report(ts).to_json()


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_scores_bounded_and_combined_exact(seed, alpha):
    ts = random_trace_set(np.random.default_rng(seed), min_k=2, max_k=5, max_statements=6)
    r = full_report(ts, ScoringConfig(alpha=alpha))
    for s in list(r.per_statement.values()) + list(r.per_edge.values()) + [r.global_, r.entropy, r.combined]:
        assert 0.0 <= s <= 1.0
    assert r.combined == alpha * r.global_ + (1 - alpha) * r.entropy
    assert r.flagged <= set(r.per_statement)
    k = ts.k
    for v in r.per_statement.values():
        assert any(abs(v - m / k) < 1e-15 for m in range(k + 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_duplicating_a_trace_never_lowers_scores_when_identical(seed):
    rng = np.random.default_rng(seed)
    base = random_trace_set(rng, min_k=1, max_k=1)
    t = base.traces[0]
    copies = tset(*(ReasoningTrace(f"c{i}", "q", t.statements, t.edges, t.final_answer) for i in range(3)))
    r = full_report(copies)
    assert r.combined == 1.0


def test_novel_trace_lowers_lambda_below_one():
    same = [mk(f"t{i}", ["a", "b"], [("a", "b")]) for i in range(3)]
    r1 = full_report(tset(*same))
    r2 = full_report(tset(*same[:2], mk("t2", ["a", "zz"], [("a", "zz")], answer="other")))
    assert r2.global_ < r1.global_ and r2.entropy < r1.entropy and r2.combined < 1.0
