"""Expression ASTs: parsing and rendering.

Grammar::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary | <implicit> power)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | VAR | FUNC "(" expr ("," expr)* ")" | "(" expr ")"

Numbers are integer or decimal literals and are held as exact ``Fraction``.
A run of letters is split into single-letter variables (``ac`` is ``a*c``)
unless it ends in a known function name followed by ``(``. A letter may be
followed by digits or an ``_`` subscript (``x1``, ``x_1``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..errors import ParseError

FUNCTIONS = ("sqrt", "sin", "cos", "tan", "exp", "log", "ln", "abs")
KINDS = ("number", "variable", "add", "mul", "pow", "neg", "div", "function")


@dataclass(frozen=True)
class Expr:
    kind: str
    value: object = None
    children: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if self.kind in ("add", "mul") and len(self.children) < 2:
            raise ValueError(f"{self.kind} needs at least two children")
        if self.kind in ("pow", "div") and len(self.children) != 2:
            raise ValueError(f"{self.kind} needs exactly two children")
        if self.kind == "neg" and len(self.children) != 1:
            raise ValueError("neg needs exactly one child")
        if self.kind in ("number", "variable") and self.children:
            raise ValueError("leaves have no children")

    @property
    def label(self) -> str:
        if self.kind == "number":
            return f"#{_render_number(self.value)}"
        if self.kind in ("variable", "function"):
            return f"{self.kind}:{self.value}"
        return self.kind

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def variables(self) -> frozenset:
        if self.kind == "variable":
            return frozenset([self.value])
        out = frozenset()
        for c in self.children:
            out |= c.variables()
        return out

    def __str__(self):
        return render(self)


def num(value) -> Expr:
    return Expr("number", Fraction(value))


def var(name: str) -> Expr:
    return Expr("variable", name)


# -- tokenizer ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<letters>[A-Za-z](?:[A-Za-z]|\d|_\w)*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, var, func, op, end
    text: str
    pos: int


def _split_letters(run: str, pos: int, call: bool):
    """Split a letter run into variables, with an optional trailing function name."""
    out = []
    func = None
    if call:
        for name in sorted(FUNCTIONS, key=len, reverse=True):
            if run.endswith(name):
                func = name
                run = run[: -len(name)]
                break
    for m in re.finditer(r"[A-Za-z](?:\d+|_\w+)?", run):
        out.append(_Tok("var", m.group(0), pos + m.start()))
    if func is not None:
        out.append(_Tok("func", func, pos + len(run)))
    return out


def tokenize(text: str):
    toks = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if not m or m.end() == i:
            raise ParseError(f"unexpected character {text[i]!r}", i)
        start = m.start(m.lastgroup)
        if m.group("num") is not None:
            toks.append(_Tok("num", m.group("num"), start))
        elif m.group("letters") is not None:
            run = m.group("letters")
            rest = text[m.end():].lstrip()
            toks.extend(_split_letters(run, start, rest.startswith("(")))
        else:
            toks.append(_Tok("op", m.group("op"), start))
        i = m.end()
    toks.append(_Tok("end", "", n))
    return toks


# -- parser -------------------------------------------------------------------

_PRIMARY_START = ("number", "identifier", "'('")


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def at_op(self, *ops):
        return self.tok.kind == "op" and self.tok.text in ops

    def expect_op(self, op):
        if not self.at_op(op):
            raise ParseError(f"unexpected {self.tok.text or 'end of input'!r}", self.tok.pos, [repr(op)])
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos, ["operator", "end of input"])
        return node

    def expr(self):
        terms = [self.term()]
        while self.at_op("+", "-"):
            op = self.advance().text
            t = self.term()
            terms.append(Expr("neg", children=(t,)) if op == "-" else t)
        return terms[0] if len(terms) == 1 else Expr("add", children=tuple(terms))

    def _starts_primary(self):
        return self.tok.kind in ("var", "func") or self.at_op("(")

    def term(self):
        factors = [self.unary()]
        while True:
            if self.at_op("*"):
                self.advance()
                factors.append(self.unary())
            elif self.at_op("/"):
                self.advance()
                right = self.unary()
                left = factors[0] if len(factors) == 1 else Expr("mul", children=tuple(factors))
                factors = [Expr("div", children=(left, right))]
            elif self._starts_primary():
                factors.append(self.power())
            else:
                break
        return factors[0] if len(factors) == 1 else Expr("mul", children=tuple(factors))

    def unary(self):
        if self.at_op("-"):
            self.advance()
            return Expr("neg", children=(self.unary(),))
        return self.power()

    def power(self):
        base = self.primary()
        if self.at_op("^"):
            self.advance()
            return Expr("pow", children=(base, self.unary()))
        return base

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Expr("number", Fraction(t.text))
        if t.kind == "var":
            self.advance()
            return Expr("variable", t.text)
        if t.kind == "func":
            self.advance()
            self.expect_op("(")
            args = [self.expr()]
            while self.at_op(","):
                self.advance()
                args.append(self.expr())
            self.expect_op(")")
            return Expr("function", t.text, tuple(args))
        if self.at_op("("):
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        what = t.text or "end of input"
        raise ParseError(f"unexpected {what!r}", t.pos, _PRIMARY_START + ("'-'",))


def parse_expr(text: str) -> Expr:
    """Parse ``text`` into an expression tree, raising ParseError on bad input."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, _PRIMARY_START)
    return _Parser(text).parse()


# -- renderer -----------------------------------------------------------------


def _render_number(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        # not a finite decimal; only reachable for hand-built trees
        return f"({q.numerator}/{q.denominator})"
    places = max(twos, fives)
    scaled = q.numerator * 10**places // q.denominator
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def _is_atom(e: Expr) -> bool:
    return e.kind in ("number", "variable", "function")


def _wrap(s: str) -> str:
    return f"({s})"


def render(e: Expr) -> str:
    k = e.kind
    if k == "number":
        return _render_number(e.value)
    if k == "variable":
        return e.value
    if k == "function":
        return f"{e.value}({', '.join(render(c) for c in e.children)})"
    if k == "neg":
        (c,) = e.children
        inner = render(c)
        return "-" + (inner if _is_atom(c) or c.kind == "pow" else _wrap(inner))
    if k == "add":
        parts = []
        for i, c in enumerate(e.children):
            if c.kind == "add":
                s = _wrap(render(c))
            elif i > 0 and c.kind == "neg":
                (g,) = c.children
                s = render(g)
                if g.kind == "add":
                    s = _wrap(s)
                parts.append("-" + s)
                continue
            else:
                s = render(c)
            parts.append(s if i == 0 else "+" + s)
        return "".join(parts)
    if k == "mul":
        parts = []
        for i, c in enumerate(e.children):
            s = render(c)
            if c.kind in ("add", "mul") or (c.kind == "div" and i > 0) or (c.kind == "neg" and i > 0):
                s = _wrap(s)
            parts.append(s)
        return "*".join(parts)
    if k == "div":
        a, b = e.children
        left = render(a)
        if a.kind == "add":
            left = _wrap(left)
        right = render(b)
        if not (_is_atom(b) or b.kind == "pow"):
            right = _wrap(right)
        return f"{left}/{right}"
    if k == "pow":
        a, b = e.children
        left = render(a)
        if not _is_atom(a) or (a.kind == "number" and a.value.denominator != 1):
            left = _wrap(left)
        right = render(b)
        if not _is_atom(b) or (b.kind == "number" and b.value.denominator != 1):
            right = _wrap(right)
        return f"{left}^{right}"
    raise ValueError(k)
