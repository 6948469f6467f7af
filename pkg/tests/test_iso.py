import numpy as np
import pytest

from scv.errors import DomainError, SizeCapError
from scv.iso import iso, iso_exact, iso_spectral, union_size, validate_mapping

from oracles import brute_iso, labelled_graph as graph, random_dag_pair as random_pair


def corpus(seed=7, n=200):
    rng = np.random.default_rng(seed)
    return [random_pair(rng) for _ in range(n)]


def test_identical_graphs():
    g, l = graph(["a", "b", "c"], [(0, 1), (1, 2)])
    assert iso_exact(g, g, labels1=l, labels2=l).score == 1.0
    assert iso_spectral(g, g, labels1=l, labels2=l).score == 1.0


def test_chain_example():
    g1, l1 = graph(["a", "b", "c"], [(0, 1), (1, 2)])
    g2, l2 = graph(["a", "b", "d"], [(0, 1), (1, 2)])
    assert union_size(l1, l2) == 4
    assert iso_exact(g1, g2, labels1=l1, labels2=l2).score == 0.5


def test_direction_matters():
    g1, l1 = graph(["a", "b"], [(0, 1)])
    g2, l2 = graph(["a", "b"], [(1, 0)])
    r = iso_exact(g1, g2, labels1=l1, labels2=l2)
    assert r.score == 0.5


def test_empty_graphs():
    e, le = graph([], [])
    g, l = graph(["a"], [])
    assert iso_exact(e, e, labels1=le, labels2=le).score == 1.0
    assert iso_exact(e, g, labels1=le, labels2=l).score == 0.0
    assert iso_spectral(e, g, labels1=le, labels2=l).score == 0.0


def test_provider_labels_by_default():
    g1, _ = graph(["x is even", "so x^2 is even"], [(0, 1)])
    g2, _ = graph(["x is even", "so x^2 is even"], [(0, 1)])
    assert iso_exact(g1, g2).score == 1.0


def test_size_cap_and_auto():
    g, l = graph([f"c{i}" for i in range(13)], [(i, i + 1) for i in range(12)])
    with pytest.raises(SizeCapError):
        iso_exact(g, g, labels1=l, labels2=l)
    assert iso(g, g, labels1=l, labels2=l).method == "spectral"
    assert iso(g, g, labels1=l, labels2=l, cap=30).method == "exact"
    with pytest.raises(DomainError):
        iso(g, g, labels1=l, labels2=l, method="fuzzy")


def test_exact_matches_bruteforce():
    rng = np.random.default_rng(11)
    for _ in range(150):
        g1, l1, g2, l2 = random_pair(rng, max_n=7)
        got = iso_exact(g1, g2, labels1=l1, labels2=l2)
        ref = brute_iso(l1, set(g1.edges), l1, l2, set(g2.edges), l2)
        assert got.score == ref
        assert validate_mapping(g1, g2, got.mapping, l1, l2)


def test_exact_symmetric_and_deterministic():
    for g1, l1, g2, l2 in corpus(seed=3, n=50):
        a = iso_exact(g1, g2, labels1=l1, labels2=l2)
        b = iso_exact(g2, g1, labels1=l2, labels2=l1)
        assert a.score == b.score
        assert a.mapping == iso_exact(g1, g2, labels1=l1, labels2=l2).mapping


def test_spectral_feasible_symmetric_and_below_exact():
    for g1, l1, g2, l2 in corpus(seed=4, n=100):
        s = iso_spectral(g1, g2, labels1=l1, labels2=l2)
        assert validate_mapping(g1, g2, s.mapping, l1, l2)
        assert s.score == iso_spectral(g2, g1, labels1=l2, labels2=l1).score
        assert s.score <= iso_exact(g1, g2, labels1=l1, labels2=l2).score


def test_spectral_close_to_exact():
    pairs = corpus()
    close = sum(
        abs(iso_spectral(g1, g2, labels1=l1, labels2=l2).score - iso_exact(g1, g2, labels1=l1, labels2=l2).score)
        <= 0.15
        for g1, l1, g2, l2 in pairs
    )
    assert close >= 180


def test_spectral_scales():
    rng = np.random.default_rng(0)
    n = 80
    labs = [f"c{int(x)}" for x in rng.integers(0, 40, n)]
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.05]
    g, l = graph(labs, edges)
    assert iso_spectral(g, g, labels1=l, labels2=l).score > 0.5
