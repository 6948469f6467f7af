"""Structural agreement between two reasoning graphs.

Two vertices are compatible when their statements fall in the same
equivalence class. A mapping is feasible when it pairs compatible vertices
injectively and the induced subgraphs agree edge for edge (direction
included). The score is ``|mapping| / |union|``, where the union counts
each equivalence class ``max(count in G1, count in G2)`` times.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .equivalence import SimilarityProvider
from .errors import DomainError, SizeCapError
from .traces import ReasoningGraph

DEFAULT_EXACT_CAP = 24


@dataclass(frozen=True)
class IsoResult:
    score: float
    mapping: dict
    method: str


def pair_labels(g1: ReasoningGraph, g2: ReasoningGraph, provider: SimilarityProvider | None = None):
    """Cluster the vertices of two graphs and return one label dict per graph."""
    provider = provider or SimilarityProvider()
    nodes = [(0, v) for v in g1.vertices] + [(1, v) for v in g2.vertices]
    parent = list(range(len(nodes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if find(i) != find(j) and provider.similarity(nodes[i][1], nodes[j][1]) >= provider.threshold:
                parent[find(j)] = find(i)
    rep = {}
    for i, (side, v) in enumerate(nodes):
        r = find(i)
        rep[r] = min(rep.get(r, (side, v.id)), (side, v.id))
    l1 = {v.id: rep[find(i)] for i, (side, v) in enumerate(nodes) if side == 0}
    l2 = {v.id: rep[find(i)] for i, (side, v) in enumerate(nodes) if side == 1}
    return l1, l2


def union_size(labels1: dict, labels2: dict) -> int:
    c1, c2 = Counter(labels1.values()), Counter(labels2.values())
    return sum(max(c1[k], c2[k]) for k in set(c1) | set(c2))


def _score(n_mapped, labels1, labels2):
    u = union_size(labels1, labels2)
    if u == 0:
        return 1.0
    return n_mapped / u


def validate_mapping(g1, g2, mapping, labels1, labels2) -> bool:
    """Check injectivity, label compatibility and induced-edge agreement."""
    if len(set(mapping.values())) != len(mapping):
        return False
    for u, v in mapping.items():
        if u not in labels1 or v not in labels2 or labels1[u] != labels2[v]:
            return False
    items = list(mapping.items())
    for i, (u1, v1) in enumerate(items):
        for u2, v2 in items[i + 1:]:
            if ((u1, u2) in g1.edges) != ((v1, v2) in g2.edges):
                return False
            if ((u2, u1) in g1.edges) != ((v2, v1) in g2.edges):
                return False
    return True


def _resolve_labels(g1, g2, provider, labels1, labels2):
    if labels1 is None or labels2 is None:
        return pair_labels(g1, g2, provider)
    return labels1, labels2


def _consistent(g1, g2, mapping, u, v):
    for u2, v2 in mapping.items():
        if ((u, u2) in g1.edges) != ((v, v2) in g2.edges):
            return False
        if ((u2, u) in g1.edges) != ((v2, v) in g2.edges):
            return False
    return True


def _edge_count(g1, mapping):
    keys = set(mapping)
    return sum(1 for a, b in g1.edges if a in keys and b in keys)


def iso_exact(g1, g2, provider=None, labels1=None, labels2=None, cap=DEFAULT_EXACT_CAP) -> IsoResult:
    """Maximum common induced subgraph by branch and bound.

    Ties on vertex count are broken by preserved edge count, then by the
    lexicographically smallest sorted list of mapped pairs.
    """
    if len(g1) + len(g2) > cap:
        raise SizeCapError(f"{len(g1)} + {len(g2)} vertices exceeds the exact cap of {cap}")
    labels1, labels2 = _resolve_labels(g1, g2, provider, labels1, labels2)
    if len(g1) == 0 and len(g2) == 0:
        return IsoResult(1.0, {}, "exact")

    by_label2 = {}
    for v in g2.order:
        by_label2.setdefault(labels2[v], []).append(v)
    order1 = [u for u in g1.order if labels1[u] in by_label2]
    remaining_by_label = Counter(labels1[u] for u in order1)
    avail2 = Counter({k: len(vs) for k, vs in by_label2.items()})

    best = {"size": -1, "edges": -1, "pairs": None, "mapping": {}}
    mapping = {}
    used = set()

    def bound():
        return sum(min(c, avail2[k]) for k, c in remaining_by_label.items())

    def record():
        size = len(mapping)
        edges = _edge_count(g1, mapping)
        pairs = tuple(sorted(mapping.items()))
        key = (size, edges)
        if key > (best["size"], best["edges"]) or (key == (best["size"], best["edges"]) and pairs < best["pairs"]):
            best.update(size=size, edges=edges, pairs=pairs, mapping=dict(mapping))

    def search(i):
        if len(mapping) + bound() < best["size"]:
            return
        if i == len(order1):
            record()
            return
        u = order1[i]
        lab = labels1[u]
        remaining_by_label[lab] -= 1
        for v in by_label2[lab]:
            if v in used or not _consistent(g1, g2, mapping, u, v):
                continue
            mapping[u] = v
            used.add(v)
            avail2[lab] -= 1
            search(i + 1)
            avail2[lab] += 1
            used.discard(v)
            del mapping[u]
        search(i + 1)
        remaining_by_label[lab] += 1

    search(0)
    result = best["mapping"]
    return IsoResult(_score(len(result), labels1, labels2), result, "exact")


# -- spectral approximation ---------------------------------------------------


def _laplacian_embedding(g: ReasoningGraph, dims: int = 4, seed: int = 0) -> dict:
    ids = list(g.order)
    n = len(ids)
    out = {sid: np.zeros(dims) for sid in ids}
    if n < 2:
        return out
    index = {sid: i for i, sid in enumerate(ids)}
    adj = np.zeros((n, n))
    for a, b in g.edges:
        adj[index[a], index[b]] = adj[index[b], index[a]] = 1.0
    lap = np.diag(adj.sum(axis=1)) - adj
    _, vecs = np.linalg.eigh(lap)
    d = min(dims, n - 1)
    rng = np.random.default_rng(seed)
    coords = np.zeros((n, dims))
    for j in range(d):
        vec = vecs[:, j + 1]
        skew = float(np.sum(vec**3))
        if abs(skew) < 1e-12:
            # symmetric vector: fall back to a seeded sign
            sign = 1.0 if rng.random() < 0.5 else -1.0
        else:
            sign = 1.0 if skew > 0 else -1.0
        coords[:, j] = sign * vec
    return {sid: coords[index[sid]] for sid in ids}


def _content_feature(label, dims: int = 8) -> np.ndarray:
    digest = hashlib.sha256(repr(label).encode("utf-8")).digest()
    return np.frombuffer(digest[:dims], dtype=np.uint8).astype(float) / 255.0


def _spectral_one_way(g1, g2, labels1, labels2, seed):
    e1 = _laplacian_embedding(g1, seed=seed)
    e2 = _laplacian_embedding(g2, seed=seed)
    feat1 = {u: np.concatenate([e1[u], _content_feature(labels1[u])]) for u in g1.order}
    feat2 = {v: np.concatenate([e2[v], _content_feature(labels2[v])]) for v in g2.order}
    candidates = []
    for u in g1.order:
        for v in g2.order:
            if labels1[u] == labels2[v]:
                dist = float(np.linalg.norm(feat1[u] - feat2[v]))
                candidates.append((dist, u, v))
    candidates.sort()
    sim = {}
    mapping = {}
    used = set()
    for dist, u, v in candidates:
        if u in mapping or v in used:
            continue
        mapping[u] = v
        used.add(v)
        sim[u] = 1.0 / (1.0 + dist)

    while True:
        violators = Counter()
        items = list(mapping.items())
        for i, (u1, v1) in enumerate(items):
            for u2, v2 in items[i + 1:]:
                if ((u1, u2) in g1.edges) != ((v1, v2) in g2.edges) or (
                    (u2, u1) in g1.edges
                ) != ((v2, v1) in g2.edges):
                    violators[u1] += 1
                    violators[u2] += 1
        if not violators:
            break
        worst = min(violators, key=lambda u: (sim[u], -violators[u], u))
        mapping.pop(worst)

    _augment(g1, g2, mapping, candidates)
    # local search: drop one pair if re-augmenting then gains at least one
    improved = True
    while improved:
        improved = False
        for u in sorted(mapping, key=lambda x: (sim.get(x, 0.0), x)):
            trial = {a: b for a, b in mapping.items() if a != u}
            _augment(g1, g2, trial, candidates, skip=(u, mapping[u]))
            if len(trial) > len(mapping):
                mapping = trial
                improved = True
                break
    return mapping


def _augment(g1, g2, mapping, candidates, skip=None):
    """Add every compatible pair that keeps the mapping feasible, nearest first."""
    used = set(mapping.values())
    for _, u, v in candidates:
        if (u, v) == skip or u in mapping or v in used:
            continue
        if _consistent(g1, g2, mapping, u, v):
            mapping[u] = v
            used.add(v)


def iso_spectral(g1, g2, provider=None, labels1=None, labels2=None, seed: int = 0) -> IsoResult:
    """Polynomial-time feasible mapping from Laplacian eigenvector features.

    Runs the greedy matching in both directions and keeps the larger result
    so the score is symmetric.
    """
    labels1, labels2 = _resolve_labels(g1, g2, provider, labels1, labels2)
    if len(g1) == 0 and len(g2) == 0:
        return IsoResult(1.0, {}, "spectral")
    forward = _spectral_one_way(g1, g2, labels1, labels2, seed)
    backward = _spectral_one_way(g2, g1, labels2, labels1, seed)
    backward = {u: v for v, u in backward.items()}
    fk = (len(forward), tuple(sorted(forward.items())))
    bk = (len(backward), tuple(sorted(backward.items())))
    mapping = forward if (fk[0] > bk[0] or (fk[0] == bk[0] and fk[1] <= bk[1])) else backward
    return IsoResult(_score(len(mapping), labels1, labels2), mapping, "spectral")


def iso(g1, g2, provider=None, labels1=None, labels2=None, method="auto", cap=DEFAULT_EXACT_CAP, seed=0):
    if method == "exact":
        return iso_exact(g1, g2, provider, labels1, labels2, cap=cap)
    if method == "spectral":
        return iso_spectral(g1, g2, provider, labels1, labels2, seed=seed)
    if method == "auto":
        if len(g1) + len(g2) <= cap:
            return iso_exact(g1, g2, provider, labels1, labels2, cap=cap)
        return iso_spectral(g1, g2, provider, labels1, labels2, seed=seed)
    raise DomainError(f"unknown iso method {method!r}")
