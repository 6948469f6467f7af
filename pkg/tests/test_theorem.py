import pytest

from scv.consistency import ScoringConfig
from scv.theorem import check_soundness, check_step, combine_theorem, parse_formula, sc_theorem, step_validity
from scv.traces import ReasoningTrace, Statement, TraceSet

F = parse_formula


def step(sid, text, rule, premises=None):
    return Statement(sid, text, "claim", rule=rule, premises=premises)


def proof(tid, steps, edges=(), answer="Q"):
    return ReasoningTrace(tid, "q", tuple(steps), tuple(edges), answer)


def test_modus_ponens():
    assert check_step("modus_ponens", [F("P"), F("P -> Q")], F("Q"))
    assert not check_step("modus_ponens", [F("P"), F("R -> Q")], F("Q"))


def test_partial_result_is_not_the_claim():
    assert not check_step("modus_ponens", [F("P -> R")], F("P -> Q"))
    assert not check_step("and_elim", [F("P -> R")], F("P -> Q"))


@pytest.mark.parametrize(
    "rule,premises,conclusion,ok",
    [
        ("and_intro", ["P", "Q"], "P & Q", True),
        ("and_intro", ["P"], "P & Q", False),
        ("and_elim", ["P & Q"], "Q", True),
        ("and_elim", ["P | Q"], "Q", False),
        ("or_intro", ["P"], "P | Q", True),
        ("or_intro", ["R"], "P | Q", False),
        ("substitution_of_equals", ["x = 2", "x^2 + 1 = 5"], "2^2 + 1 = 5", True),
        ("substitution_of_equals", ["x = 2", "2^2 = 4"], "x^2 = 4", True),
        ("substitution_of_equals", ["x = 3", "2^2 = 4"], "x^2 = 4", False),
        ("arithmetic_fact", [], "6*7 = 42", True),
        ("arithmetic_fact", [], "6*7 = 41", False),
        ("arithmetic_fact", [], "2^10 > 1000", True),
        ("arithmetic_fact", [], "x + 1 = 2", False),
        ("unknown", ["P"], "P", False),
    ],
)
def test_rule_schemas(rule, premises, conclusion, ok):
    assert check_step(rule, [F(p) for p in premises], F(conclusion)) is ok


def test_soundness_fraction_and_unknown_rule():
    t = proof("t", [
        step("h1", "P", "hypothesis"),
        step("h2", "P -> Q", "hypothesis"),
        step("s1", "Q", "modus_ponens", ["h1", "h2"]),
        step("s2", "R", None, ["s1"]),
    ], [("h1", "s1"), ("h2", "s1"), ("s1", "s2")])
    assert step_validity(t) == {"s1": True, "s2": False}
    assert check_soundness(t) == 0.5


def test_premises_default_to_graph_parents():
    t = proof("t", [step("a", "P", "hypothesis"), step("b", "P -> Q", "hypothesis"),
                    step("c", "Q", "modus_ponens")], [("a", "c"), ("b", "c")])
    assert check_soundness(t) == 1.0


def test_hypotheses_only_vacuous():
    t = proof("t", [step("a", "P", "hypothesis"), step("b", "Q", "hypothesis")])
    assert check_soundness(t) == 1.0


def test_hypothesis_with_premises_invalid():
    t = proof("t", [step("a", "P", "hypothesis"), step("b", "Q", "hypothesis", ["a"])], [("a", "b")])
    assert check_soundness(t) == 0.0


def test_premise_must_come_earlier():
    t = proof("t", [step("a", "P", "hypothesis"), step("c", "Q", "modus_ponens", ["a", "b"]),
                    step("b", "P -> Q", "hypothesis")], [("c", "b")])
    assert step_validity(t)["c"] is False


def test_renaming_ids_does_not_change_soundness():
    steps = [step("h1", "P", "hypothesis"), step("h2", "P -> Q", "hypothesis"),
             step("s1", "Q", "modus_ponens", ["h1", "h2"]), step("s2", "Q | R", "or_intro", ["s1"])]
    t = proof("t", steps, [("h1", "s1"), ("h2", "s1"), ("s1", "s2")])
    ren = {"h1": "zz", "h2": "yy", "s1": "xx", "s2": "ww"}
    steps2 = [Statement(ren[s.id], s.text, s.kind, rule=s.rule,
                        premises=tuple(ren[p] for p in s.premises) if s.premises else s.premises) for s in steps]
    t2 = proof("t", steps2, [(ren[a], ren[b]) for a, b in t.edges])
    assert check_soundness(t) == check_soundness(t2) == 1.0


def test_combine():
    s = combine_theorem(0.8, 1.0, 0.5)
    assert s.combined == pytest.approx(0.9)
    assert combine_theorem(0.37, 0.2, 1.0).combined == 0.37
    s = combine_theorem(0.6, 0.3, 0.25)
    assert s.combined == 0.25 * 0.6 + 0.75 * 0.3


def _good(tid):
    return proof(tid, [step("h1", "P", "hypothesis"), step("h2", "P -> Q", "hypothesis"),
                       step("s1", "Q", "modus_ponens", ["h1", "h2"])], [("h1", "s1"), ("h2", "s1")])


def test_sc_theorem_identical_sound_proofs():
    ts = TraceSet("q", tuple(_good(f"t{i}") for i in range(3)), "theorem")
    assert sc_theorem(ts, 0.5).combined == 1.0


def test_inserting_invalid_step_lowers_soundness():
    good = TraceSet("q", tuple(_good(f"t{i}") for i in range(3)), "theorem")
    bad_traces = []
    for t in good.traces:
        bad_traces.append(ReasoningTrace(t.trace_id, "q", t.statements + (step("x", "S", "unknown", ["s1"]),),
                                         t.edges + (("s1", "x"),), t.final_answer))
    bad = TraceSet("q", tuple(bad_traces), "theorem")
    for beta in (0.0, 0.3, 0.7):
        g, b = sc_theorem(good, beta), sc_theorem(bad, beta)
        assert b.soundness < g.soundness
        assert b.combined <= g.combined
    cfg = ScoringConfig(iso_method="exact")
    assert sc_theorem(bad, 1.0, cfg).combined == sc_theorem(bad, 1.0, cfg).sc_proof


def test_parenthesised_atoms_and_relations():
    assert check_step("and_elim", [F("(x^2 = 4) & (x > 0)")], F("x > 0"))
    assert check_step("modus_ponens", [F("x = 2"), F("(x = 2) -> (x^2 = 4)")], F("x^2=4"))
