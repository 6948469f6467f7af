"""Exact polynomial arithmetic and algebraic-equivalence decisions.

Polynomials are dicts mapping a monomial (a sorted tuple of ``(var, exp)``
pairs) to a ``Fraction`` coefficient. Zero coefficients are never stored.
"""

from __future__ import annotations

import enum
import random
from fractions import Fraction
from functools import reduce

import mpmath

from ..errors import EvaluationError
from .expr import Expr

_MP_DPS = 50
_FLOAT_RTOL = mpmath.mpf(10) ** -30


class Verdict(str, enum.Enum):
    EQUIVALENT = "equivalent"
    NOT_EQUIVALENT = "not_equivalent"
    EQUIVALENT_WITH_DOMAIN_CAVEAT = "equivalent_with_domain_caveat"

    @property
    def holds(self) -> bool:
        return self is not Verdict.NOT_EQUIVALENT


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(): Fraction(c)})

    @classmethod
    def var(cls, name: str) -> "Poly":
        return cls({((name, 1),): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(m == () for m in self.terms)

    def const_value(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def variables(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    def __pow__(self, n: int) -> "Poly":
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c) -> "Poly":
        return Poly({m: c * v for m, v in self.terms.items()})

    def evaluate(self, point) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for v, e in m:
                term *= Fraction(point[v]) ** e
            total += term
        return total

    def divides(self, other: "Poly") -> bool:
        """True when ``self`` divides ``other`` exactly (single-divisor division)."""
        if self.is_zero():
            return other.is_zero()
        order = sorted(self.variables() | other.variables())
        key = lambda m: _exponent_vector(m, order)  # noqa: E731
        lead_m = max(self.terms, key=key)
        lead_c = self.terms[lead_m]
        p = Poly(other.terms)
        while not p.is_zero():
            pm = max(p.terms, key=key)
            q = _mono_div(pm, lead_m)
            if q is None:
                return False
            p = p - self * Poly({q: p.terms[pm] / lead_c})
        return True

    def __repr__(self):
        return f"Poly({render_poly(self)!r})"


def _mono_mul(m1, m2):
    d = dict(m1)
    for v, e in m2:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _mono_div(m, d):
    out = dict(m)
    for v, e in d:
        if out.get(v, 0) < e:
            return None
        out[v] -= e
        if out[v] == 0:
            del out[v]
    return tuple(sorted(out.items()))


def _exponent_vector(m, order):
    d = dict(m)
    return tuple(d.get(v, 0) for v in order)


def render_poly(p: Poly) -> str:
    """Deterministic text form; equal polynomials render identically."""
    if p.is_zero():
        return "0"
    order = sorted(p.variables())
    monos = sorted(p.terms, key=lambda m: (-sum(e for _, e in m), [-x for x in _exponent_vector(m, order)]))
    parts = []
    for m in monos:
        c = p.terms[m]
        body = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
        if not body:
            parts.append(str(c))
        elif c == 1:
            parts.append(body)
        elif c == -1:
            parts.append("-" + body)
        else:
            parts.append(f"{c}*{body}")
    return "+".join(parts).replace("+-", "-")


# -- AST conversions ------------------------------------------------------------


def _const_int_exponent(e: Expr):
    p = to_poly(e)
    if p is None or not p.is_const():
        return None
    v = p.const_value()
    return int(v) if v.denominator == 1 else None


def to_poly(e: Expr):
    """Expand to a polynomial, or return None if ``e`` is not a polynomial."""
    k = e.kind
    if k == "number":
        return Poly.const(e.value)
    if k == "variable":
        return Poly.var(e.value)
    if k == "function":
        return None
    if k == "neg":
        p = to_poly(e.children[0])
        return None if p is None else -p
    if k in ("add", "mul"):
        parts = [to_poly(c) for c in e.children]
        if any(p is None for p in parts):
            return None
        op = (lambda a, b: a + b) if k == "add" else (lambda a, b: a * b)
        return reduce(op, parts)
    if k == "div":
        a, b = (to_poly(c) for c in e.children)
        if a is None or b is None or not b.is_const() or b.is_zero():
            return None
        return a.scale(1 / b.const_value())
    if k == "pow":
        n = _const_int_exponent(e.children[1])
        if n is None or n < 0:
            return None
        base = to_poly(e.children[0])
        return None if base is None else base**n
    raise ValueError(k)


def to_rational(e: Expr):
    """Return ``(numerator, denominator, undefined_polys)`` or None.

    ``undefined_polys`` lists every polynomial whose zeros make some
    subexpression undefined (division by zero). None is returned for
    expressions with functions or non-integer exponents.
    """
    k = e.kind
    if k == "number":
        return Poly.const(e.value), Poly.const(1), []
    if k == "variable":
        return Poly.var(e.value), Poly.const(1), []
    if k == "function":
        return None
    parts = [to_rational(c) for c in e.children]
    if any(p is None for p in parts):
        return None
    if k == "neg":
        n, d, u = parts[0]
        return -n, d, u
    if k == "add":
        n, d, u = parts[0]
        u = list(u)
        for n2, d2, u2 in parts[1:]:
            n, d = n * d2 + n2 * d, d * d2
            u += u2
        return n, d, u
    if k == "mul":
        n, d, u = parts[0]
        u = list(u)
        for n2, d2, u2 in parts[1:]:
            n, d = n * n2, d * d2
            u += u2
        return n, d, u
    if k == "div":
        (n1, d1, u1), (n2, d2, u2) = parts
        return n1 * d2, d1 * n2, u1 + u2 + [n2]
    if k == "pow":
        m = _const_int_exponent(e.children[1])
        if m is None:
            return None
        n, d, u = parts[0]
        if m >= 0:
            return n**m, d**m, list(u)
        return d ** (-m), n ** (-m), list(u) + [n]
    raise ValueError(k)


def _zero_set_contained(f: Poly, g: Poly) -> bool:
    """V(f) is a subset of V(g) over the complex numbers, i.e. f | g^deg(f)."""
    if f.is_const():
        return not f.is_zero() or g.is_zero()
    return f.divides(g ** f.degree())


def same_undefined_set(u1, u2) -> bool:
    one = Poly.const(1)
    p1 = reduce(lambda a, b: a * b, u1, one)
    p2 = reduce(lambda a, b: a * b, u2, one)
    return _zero_set_contained(p1, p2) and _zero_set_contained(p2, p1)


# -- numeric evaluation -----------------------------------------------------------


class Undefined(Exception):
    """Raised when an expression has no real value at a point."""


def _as_mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return x


_MP_FUNCS = {
    "sin": mpmath.sin,
    "cos": mpmath.cos,
    "tan": mpmath.tan,
    "exp": mpmath.exp,
    "abs": abs,
}


def evaluate(e: Expr, point):
    """Evaluate at a point of rationals; exact where possible, mpmath otherwise."""
    k = e.kind
    if k == "number":
        return e.value
    if k == "variable":
        return Fraction(point[e.value])
    vals = [evaluate(c, point) for c in e.children]
    if k == "neg":
        return -vals[0]
    if k == "add":
        return reduce(lambda a, b: a + b if isinstance(a, Fraction) and isinstance(b, Fraction)
                      else _as_mpf(a) + _as_mpf(b), vals)
    if k == "mul":
        return reduce(lambda a, b: a * b if isinstance(a, Fraction) and isinstance(b, Fraction)
                      else _as_mpf(a) * _as_mpf(b), vals)
    if k == "div":
        a, b = vals
        if b == 0:
            raise Undefined("division by zero")
        if isinstance(a, Fraction) and isinstance(b, Fraction):
            return a / b
        return _as_mpf(a) / _as_mpf(b)
    if k == "pow":
        a, b = vals
        if isinstance(b, Fraction) and b.denominator == 1:
            if a == 0 and b < 0:
                raise Undefined("zero to a negative power")
            if isinstance(a, Fraction):
                if abs(b.numerator) > 64:
                    return _as_mpf(a) ** int(b)
                return a**b.numerator
            return _as_mpf(a) ** int(b)
        if a < 0:
            raise Undefined("non-integer power of a negative base")
        if a == 0:
            if b <= 0:
                raise Undefined("zero to a non-positive power")
            return Fraction(0)
        return _as_mpf(a) ** _as_mpf(b)
    if k == "function":
        name = e.value
        if len(vals) != 1:
            raise Undefined(f"{name} takes one argument")
        x = vals[0]
        if name == "sqrt":
            if x < 0:
                raise Undefined("sqrt of a negative number")
            return mpmath.sqrt(_as_mpf(x))
        if name in ("log", "ln"):
            if x <= 0:
                raise Undefined("log of a non-positive number")
            return mpmath.log(_as_mpf(x))
        if name == "tan" and mpmath.cos(_as_mpf(x)) == 0:
            raise Undefined("tan pole")
        if name == "abs" and isinstance(x, Fraction):
            return abs(x)
        return _MP_FUNCS[name](_as_mpf(x))
    raise ValueError(k)


def _values_equal(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    a, b = _as_mpf(a), _as_mpf(b)
    scale = max(mpmath.mpf(1), abs(a), abs(b))
    return abs(a - b) <= _FLOAT_RTOL * scale


def _random_point(rng: random.Random, variables):
    return {v: Fraction(rng.randint(-1000, 1000), rng.randint(1, 97)) for v in variables}


def random_evaluation_equal(t1: Expr, t2: Expr, points: int = 12, seed: int = 0):
    """Compare two expressions at seeded random rational points.

    Returns ``(all_equal, saw_one_sided_undefined)``. Points at which either
    side is undefined are resampled; if more than half of the attempts are
    undefined for either expression an EvaluationError is raised.
    """
    rng = random.Random(seed)
    variables = sorted(t1.variables() | t2.variables())
    undefined = [0, 0]
    one_sided = False
    attempts = 0
    good = 0
    max_attempts = 4 * points
    with mpmath.workdps(_MP_DPS):
        while good < points and attempts < max_attempts:
            attempts += 1
            point = _random_point(rng, variables)
            results = []
            for i, t in enumerate((t1, t2)):
                try:
                    results.append(evaluate(t, point))
                except (Undefined, ZeroDivisionError, ValueError, OverflowError):
                    undefined[i] += 1
                    results.append(None)
            if (results[0] is None) != (results[1] is None):
                one_sided = True
            if None in results:
                continue
            good += 1
            if not _values_equal(*results):
                return False, one_sided
    for i in (0, 1):
        if undefined[i] / attempts > 0.5:
            raise EvaluationError(
                f"expression {i + 1} undefined at {undefined[i]} of {attempts} sample points"
            )
    if good < points:
        raise EvaluationError(f"only {good} of {points} sample points were defined for both sides")
    return True, one_sided


def algebraic_equivalence(t1: Expr, t2: Expr, method: str = "auto", points: int = 12, seed: int = 0) -> Verdict:
    """Decide whether two expressions are algebraically equal.

    ``method`` is ``"auto"`` (exact expansion when both sides are polynomials,
    randomized evaluation otherwise), ``"expand"`` or ``"random"``.
    """
    if method not in ("auto", "expand", "random"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "expand"):
        p1, p2 = to_poly(t1), to_poly(t2)
        if p1 is not None and p2 is not None:
            return Verdict.EQUIVALENT if p1 == p2 else Verdict.NOT_EQUIVALENT
        if method == "expand":
            raise ValueError("expansion path needs polynomial inputs")
    equal, one_sided = random_evaluation_equal(t1, t2, points=points, seed=seed)
    if not equal:
        return Verdict.NOT_EQUIVALENT
    r1, r2 = to_rational(t1), to_rational(t2)
    if r1 is not None and r2 is not None:
        caveat = not same_undefined_set(r1[2], r2[2])
    else:
        caveat = one_sided
    return Verdict.EQUIVALENT_WITH_DOMAIN_CAVEAT if caveat else Verdict.EQUIVALENT


def canonical_form(e: Expr) -> str:
    """A text key equal for expressions with the same expanded polynomial.

    Non-polynomial expressions fall back to a sorted rendering of the tree.
    """
    p = to_poly(e)
    if p is not None:
        return render_poly(p)
    from .ted import sort_commutative
    from .expr import render

    return render(sort_commutative(e))
