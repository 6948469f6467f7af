"""Statement similarity and cross-trace alignment into equivalence classes."""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import DomainError, ParseError, ProviderError
from .traces import Statement, TraceSet

DEFAULT_THRESHOLD = 0.85

_TOKEN = re.compile(r"\w+|[^\w\s]")
_RELATION = re.compile(r"(<=|>=|!=|=|<|>|≤|≥|≠)")


@lru_cache(maxsize=65536)
def _tokens(text: str) -> frozenset:
    return frozenset(t.lower() for t in _TOKEN.findall(text))


def jaccard(a: str, b: str) -> float:
    ta, tb = _tokens(a), _tokens(b)
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


@lru_cache(maxsize=65536)
def expression_canonical(text: str) -> str | None:
    """Canonical key for an expression or a relation between expressions."""
    from .symbolic.algebra import canonical_form
    from .symbolic.expr import parse_expr

    parts = _RELATION.split(text)
    try:
        if len(parts) == 1:
            return canonical_form(parse_expr(text))
        if len(parts) == 3:
            lhs, op, rhs = parts
            return f"{canonical_form(parse_expr(lhs))}{op}{canonical_form(parse_expr(rhs))}"
    except ParseError:
        return None
    return None


@dataclass(frozen=True)
class SimilarityProvider:
    """Deterministic similarity: canonical-form match or token Jaccard.

    Cross-kind pairs score 0. A pair scores 1 when canonical forms are equal
    or the Jaccard index reaches the threshold; otherwise the Jaccard index.
    """

    name: str = "token"
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise DomainError(f"similarity threshold must lie in [0, 1], got {self.threshold}")

    def canonical(self, s: Statement) -> str | None:
        if s.canonical is not None:
            return s.canonical
        if s.kind == "numeric":
            return repr(float(s.value))
        return None

    def similarity(self, a: Statement, b: Statement) -> float:
        if a.kind != b.kind:
            return 0.0
        if a.text == b.text:
            return 1.0
        ca, cb = self.canonical(a), self.canonical(b)
        if ca is not None and ca == cb:
            return 1.0
        j = jaccard(a.text, b.text)
        return 1.0 if j >= self.threshold else j


@dataclass(frozen=True)
class CanonicalProvider(SimilarityProvider):
    """Like the token provider, but derives canonical forms of expressions."""

    name: str = "canonical"

    def canonical(self, s: Statement) -> str | None:
        c = super().canonical(s)
        if c is None and s.kind == "expression":
            c = expression_canonical(s.text)
        return c


@dataclass(frozen=True)
class RemoteProvider(SimilarityProvider):
    """Cosine similarity of embeddings fetched from an HTTP endpoint.

    The endpoint receives ``{"texts": [...]}`` and must answer with
    ``{"embeddings": [[...], ...]}``.
    """

    name: str = "remote"
    url: str | None = None
    timeout: float = 10.0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def _embed(self, text: str):
        if text in self._cache:
            return self._cache[text]
        import requests

        url = self.url or os.environ.get("SCV_EMBED_URL")
        if not url:
            raise ProviderError("remote similarity provider needs SCV_EMBED_URL")
        try:
            resp = requests.post(url, json={"texts": [text]}, timeout=self.timeout)
            resp.raise_for_status()
            vec = [float(x) for x in resp.json()["embeddings"][0]]
        except (requests.RequestException, KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        self._cache[text] = vec
        return vec

    def similarity(self, a: Statement, b: Statement) -> float:
        if a.kind != b.kind:
            return 0.0
        if a.text == b.text:
            return 1.0
        ca, cb = self.canonical(a), self.canonical(b)
        if ca is not None and ca == cb:
            return 1.0
        va, vb = self._embed(a.text), self._embed(b.text)
        na = math.sqrt(sum(x * x for x in va))
        nb = math.sqrt(sum(x * x for x in vb))
        if na == 0 or nb == 0:
            return 0.0
        cos = sum(x * y for x, y in zip(va, vb)) / (na * nb)
        return min(1.0, max(0.0, cos))


def make_provider(name: str = "token", threshold: float = DEFAULT_THRESHOLD, url: str | None = None):
    if name == "token":
        return SimilarityProvider(threshold=threshold)
    if name == "canonical":
        return CanonicalProvider(threshold=threshold)
    if name == "remote":
        return RemoteProvider(threshold=threshold, url=url)
    raise DomainError(f"unknown similarity provider {name!r}")


def similarity(a: Statement, b: Statement, provider: SimilarityProvider | None = None) -> float:
    return (provider or SimilarityProvider()).similarity(a, b)


Key = tuple  # (trace_id, statement_id)


@dataclass(frozen=True)
class AlignmentMap:
    classes: tuple  # tuple of sorted member tuples, ordered by representative
    class_of: dict = field(repr=False)  # member key -> representative key
    statements: dict = field(repr=False)  # member key -> Statement

    @property
    def representatives(self) -> tuple:
        return tuple(c[0] for c in self.classes)

    def members(self, rep: Key) -> tuple:
        for c in self.classes:
            if c[0] == rep:
                return c
        raise KeyError(rep)

    def representative_statement(self, rep: Key) -> Statement:
        return self.statements[rep]

    def labels(self, trace_id: str) -> dict:
        """statement id -> class representative for one trace."""
        return {sid: rep for (tid, sid), rep in self.class_of.items() if tid == trace_id}


def _content_key(s: Statement):
    return (s.kind, s.text, s.canonical, s.value)


def align(traces: TraceSet, provider: SimilarityProvider | None = None) -> AlignmentMap:
    """Single-linkage clustering of all statements over similarity >= threshold."""
    provider = provider or SimilarityProvider()
    keys = []
    stmts = {}
    for t in traces.traces:
        for s in t.statements:
            key = (t.trace_id, s.id)
            keys.append(key)
            stmts[key] = s

    # identical content always links, so cluster distinct contents only
    contents = []
    content_index = {}
    member_content = {}
    for key in keys:
        ck = _content_key(stmts[key])
        if ck not in content_index:
            content_index[ck] = len(contents)
            contents.append(stmts[key])
        member_content[key] = content_index[ck]

    parent = list(range(len(contents)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(contents)):
        for j in range(i + 1, len(contents)):
            if find(i) == find(j):
                continue
            if provider.similarity(contents[i], contents[j]) >= provider.threshold:
                parent[find(j)] = find(i)

    groups = {}
    for key in keys:
        groups.setdefault(find(member_content[key]), []).append(key)
    classes = sorted((tuple(sorted(g)) for g in groups.values()), key=lambda c: c[0])
    class_of = {m: c[0] for c in classes for m in c}
    return AlignmentMap(tuple(classes), class_of, stmts)
