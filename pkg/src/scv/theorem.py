"""Proof consistency: structural agreement plus per-step soundness.

Soundness is checked in a small fragment. It covers propositional rules over
atoms and substitution of equals inside (in)equations. Arithmetic facts are
checked exactly.
Connectives accepted in claim text: ``->``/``=>``/``→``/``⇒``/``implies``,
``&``/``∧``/``and``, ``|``/``∨``/``or``, ``~``/``¬``/``not``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from fractions import Fraction

from .consistency import ScoringConfig, psi_global
from .errors import DomainError, ParseError
from .symbolic.algebra import canonical_form, evaluate, to_poly
from .symbolic.expr import Expr, parse_expr
from .symbolic.ted import sort_commutative
from .traces import ReasoningTrace, TraceSet, build_graph

log = logging.getLogger(__name__)

_IMP = r"->|=>|→|⇒|\bimplies\b"
_OR = r"\||∨|\\/|\bor\b"
_AND = r"&|∧|/\\|\band\b"
_NOT = r"~|¬|!(?!=)|\bnot\b"
_CONNECTIVE = re.compile(f"(?:{_IMP}|{_OR}|{_AND})")
_RELATION = re.compile(r"(<=|>=|!=|≤|≥|≠|=|<|>)")
_REL_NORMAL = {"≤": "<=", "≥": ">=", "≠": "!="}


# -- formulas -------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    text: str
    relation: tuple | None = None  # (lhs Expr, op, rhs Expr) when the atom is an (in)equation

    @property
    def key(self) -> str:
        if self.relation is not None:
            lhs, op, rhs = self.relation
            return f"{canonical_form(lhs)}{op}{canonical_form(rhs)}"
        return self.text


@dataclass(frozen=True)
class Op:
    op: str  # not, and, or, imp
    args: tuple


def _atom(text: str) -> Atom:
    norm = " ".join(text.split())
    while _wrapped(norm):
        norm = norm[1:-1].strip()
    parts = _RELATION.split(norm)
    if len(parts) == 3:
        lhs, op, rhs = parts
        try:
            rel = (parse_expr(lhs), _REL_NORMAL.get(op, op), parse_expr(rhs))
        except ParseError:
            rel = None
        return Atom(norm.replace(" ", ""), rel)
    return Atom(norm.replace(" ", ""))


def _top_level_spans(s: str, pattern: str):
    """Match spans of ``pattern`` that sit at parenthesis depth 0."""
    depth = 0
    depth_at = []
    for ch in s:
        depth_at.append(depth)
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
    return [m for m in re.finditer(pattern, s) if depth_at[m.start()] == 0]


def _wrapped(s: str) -> bool:
    if not (s.startswith("(") and s.endswith(")")):
        return False
    depth = 0
    for i, ch in enumerate(s):
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0 and i < len(s) - 1:
            return False
    return True


def parse_formula(text: str):
    s = text.strip()
    if not s:
        raise ParseError("empty formula", 0)
    if _wrapped(s) and (_CONNECTIVE.search(s[1:-1]) or re.match(_NOT, s[1:-1].strip())):
        return parse_formula(s[1:-1])
    imps = _top_level_spans(s, _IMP)
    if imps:
        m = imps[0]
        return Op("imp", (parse_formula(s[: m.start()]), parse_formula(s[m.end():])))
    for name, pattern in (("or", _OR), ("and", _AND)):
        spans = _top_level_spans(s, pattern)
        if spans:
            pieces, last = [], 0
            for m in spans:
                pieces.append(s[last: m.start()])
                last = m.end()
            pieces.append(s[last:])
            return Op(name, tuple(parse_formula(p) for p in pieces))
    m = re.match(_NOT, s)
    if m:
        return Op("not", (parse_formula(s[m.end():]),))
    return _atom(s)


def formula_key(f):
    if isinstance(f, Atom):
        return ("atom", f.key)
    if f.op in ("and", "or"):
        flat = []
        for a in f.args:
            k = formula_key(a)
            flat.extend(k[1] if k[0] == f.op else [k])
        return (f.op, tuple(sorted(set(flat), key=repr)))
    return (f.op, tuple(formula_key(a) for a in f.args))


# -- rule schemas -----------------------------------------------------------------


def _conjuncts(key):
    return set(key[1]) if key[0] == "and" else {key}


def _modus_ponens(prem, concl):
    keys = {formula_key(p) for p in prem}
    ck = formula_key(concl)
    return any(k[0] == "imp" and k[1][0] in keys and k[1][1] == ck for k in keys)


def _and_intro(prem, concl):
    ck = formula_key(concl)
    if ck[0] != "and":
        return False
    have = set()
    for p in prem:
        have |= _conjuncts(formula_key(p))
    return set(ck[1]) <= have


def _and_elim(prem, concl):
    need = _conjuncts(formula_key(concl))
    for p in prem:
        pk = formula_key(p)
        if pk[0] == "and" and need <= set(pk[1]):
            return True
    return False


def _or_intro(prem, concl):
    ck = formula_key(concl)
    if ck[0] != "or":
        return False
    keys = {formula_key(p) for p in prem}
    return any(d in keys for d in ck[1])


def _same_expr(a: Expr, b: Expr) -> bool:
    return sort_commutative(a) == sort_commutative(b)


def _substitutes(a: Expr, b: Expr, lhs: Expr, rhs: Expr) -> bool:
    """``b`` is ``a`` with some occurrences of lhs replaced by rhs (or back)."""
    if _same_expr(a, b):
        return True
    if (_same_expr(a, lhs) and _same_expr(b, rhs)) or (_same_expr(a, rhs) and _same_expr(b, lhs)):
        return True
    if a.kind != b.kind or a.value != b.value or len(a.children) != len(b.children):
        return False
    return all(_substitutes(x, y, lhs, rhs) for x, y in zip(a.children, b.children))


def _formula_substitutes(f, g, lhs, rhs) -> bool:
    if isinstance(f, Atom) and isinstance(g, Atom):
        if f.key == g.key:
            return True
        if f.relation is None or g.relation is None or f.relation[1] != g.relation[1]:
            return False
        return _substitutes(f.relation[0], g.relation[0], lhs, rhs) and _substitutes(
            f.relation[2], g.relation[2], lhs, rhs
        )
    if isinstance(f, Op) and isinstance(g, Op) and f.op == g.op and len(f.args) == len(g.args):
        return all(_formula_substitutes(x, y, lhs, rhs) for x, y in zip(f.args, g.args))
    return False


def _substitution(prem, concl):
    equations = [p for p in prem if isinstance(p, Atom) and p.relation and p.relation[1] == "="]
    for eq in equations:
        lhs, _, rhs = eq.relation
        for p in prem:
            if p is eq and len(prem) > 1:
                continue
            if _formula_substitutes(p, concl, lhs, rhs):
                return True
    return False


_COMPARE = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


def _arithmetic_fact(prem, concl):
    if not isinstance(concl, Atom) or concl.relation is None:
        return False
    lhs, op, rhs = concl.relation
    if lhs.variables() or rhs.variables():
        return False
    pl, pr = to_poly(lhs), to_poly(rhs)
    if pl is None or pr is None:
        try:
            a, b = evaluate(lhs, {}), evaluate(rhs, {})
        except Exception:
            return False
        if not (isinstance(a, Fraction) and isinstance(b, Fraction)):
            return False
    else:
        a, b = pl.const_value(), pr.const_value()
    return _COMPARE[op](a, b)


_CHECKERS = {
    "modus_ponens": _modus_ponens,
    "and_intro": _and_intro,
    "and_elim": _and_elim,
    "or_intro": _or_intro,
    "substitution_of_equals": _substitution,
    "arithmetic_fact": _arithmetic_fact,
}


def check_step(rule: str, premises, conclusion) -> bool:
    """Validate one rule application on parsed formulas."""
    checker = _CHECKERS.get(rule)
    if checker is None:
        return False
    try:
        return bool(checker(list(premises), conclusion))
    except (ParseError, ZeroDivisionError):
        return False


def step_validity(trace: ReasoningTrace) -> dict:
    """statement id -> validity for every non-hypothesis step."""
    graph = build_graph(trace)
    position = {sid: i for i, sid in enumerate(graph.order)}
    parsed = {}
    for s in trace.statements:
        try:
            parsed[s.id] = parse_formula(s.text)
        except ParseError:
            parsed[s.id] = None
    out = {}
    for s in trace.statements:
        rule = s.rule or "unknown"
        premise_ids = s.premises if s.premises is not None else graph.parents[s.id]
        if rule == "hypothesis":
            if premise_ids:
                out[s.id] = False
            continue
        if parsed[s.id] is None or any(
            p not in position or position[p] >= position[s.id] or parsed[p] is None for p in premise_ids
        ):
            out[s.id] = False
            continue
        out[s.id] = check_step(rule, [parsed[p] for p in premise_ids], parsed[s.id])
    return out


def check_soundness(trace: ReasoningTrace) -> float:
    """Fraction of non-hypothesis steps that validate; 1.0 when there are none."""
    validity = step_validity(trace)
    if not validity:
        log.warning("trace %s has no checkable steps; soundness is vacuous", trace.trace_id)
        return 1.0
    return sum(validity.values()) / len(validity)


@dataclass(frozen=True)
class TheoremScore:
    sc_proof: float
    soundness: float
    beta: float
    combined: float


def combine_theorem(sc_proof: float, soundness: float, beta: float) -> TheoremScore:
    for name, x in (("sc_proof", sc_proof), ("soundness", soundness), ("beta", beta)):
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {x}")
    return TheoremScore(sc_proof, soundness, beta, beta * sc_proof + (1 - beta) * soundness)


def sc_theorem(traces: TraceSet, beta: float = 0.5, config: ScoringConfig | None = None) -> TheoremScore:
    sc_proof = psi_global(traces, config=config)
    soundness = sum(check_soundness(t) for t in traces.traces) / traces.k
    return combine_theorem(sc_proof, soundness, beta)
