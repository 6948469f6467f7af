import numpy as np
import pytest

from scv.consistency import full_report
from scv.errors import DomainError, IrreparableError
from scv.repair import repair_trace
from scv.traces import ReasoningTrace, Statement, TraceSet, validate_trace

from oracles import random_trace_set


def mk(tid, texts, edges=()):
    return ReasoningTrace(tid, "q", tuple(Statement(f"s{i}", t, "claim") for i, t in enumerate(texts)),
                          tuple(edges), "a")


def test_consistent_target_unchanged():
    ts = TraceSet("q", tuple(mk(f"t{i}", ["p one", "p two"], [("s0", "s1")]) for i in range(3)), "generic")
    assert repair_trace(ts.traces[0], ts, full_report(ts)) == ts.traces[0]


def test_conflicting_step_replaced():
    good = [mk(f"t{i}", ["start here", "shared step s", "conclude"], [("s0", "s1"), ("s1", "s2")]) for i in range(4)]
    odd = mk("t4", ["start here", "conflicting step s prime", "conclude"], [("s0", "s1"), ("s1", "s2")])
    ts = TraceSet("q", tuple(good) + (odd,), "generic")
    report = full_report(ts)
    fixed = repair_trace(odd, ts, report)
    texts = [s.text for s in fixed.statements]
    assert "shared step s" in texts and "conflicting step s prime" not in texts
    after = full_report(ts.replace(fixed))
    assert after.mean_atomic(fixed) > report.mean_atomic(odd)
    assert fixed.edges == odd.edges


def test_all_unique_is_irreparable():
    ts = TraceSet("q", tuple(mk(f"t{i}", [f"statement{i}x{j}" for j in range(3)]) for i in range(4)), "generic")
    with pytest.raises(IrreparableError):
        repair_trace(ts.traces[0], ts, full_report(ts), 0.5)


def test_removal_reroutes_edges():
    base = [mk(f"t{i}", ["alpha", "omega"], [("s0", "s1")]) for i in range(3)]
    odd = mk("t3", ["alpha", "stray middle", "omega"], [("s0", "s1"), ("s1", "s2")])
    ts = TraceSet("q", tuple(base) + (odd,), "generic")
    fixed = repair_trace(odd, ts, full_report(ts))
    assert [s.id for s in fixed.statements] == ["s0", "s2"]
    assert fixed.edges == (("s0", "s2"),)


def test_bad_threshold():
    ts = TraceSet("q", (mk("t0", ["a"]), mk("t1", ["a"])), "generic")
    with pytest.raises(DomainError):
        repair_trace(ts.traces[0], ts, full_report(ts), 1.5)


def test_randomized_invariants():
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(100):
        ts = random_trace_set(rng, min_k=3)
        target = ts.traces[int(rng.integers(0, ts.k))]
        report = full_report(ts)
        try:
            fixed = repair_trace(target, ts, report, 0.5)
        except IrreparableError:
            continue
        checked += 1
        validate_trace(fixed)
        rescored_set = ts.replace(fixed)
        rescored = full_report(rescored_set)
        assert rescored.mean_atomic(fixed) >= report.mean_atomic(target)
        assert repair_trace(fixed, rescored_set, rescored, 0.5) == fixed
    assert checked >= 90
