import math

import numpy as np
import pytest
from scipy import stats

from scv.errors import BoundInvalidError, DegenerateError, DomainError
from scv.simlab import (
    Dag,
    SimSpec,
    bound_error,
    conditional_entropy,
    convergence_check,
    entropy_inequalities,
    entropy_reduction_check,
    exact_final_error,
    intermediate_benefit,
    majority_error_exact,
    propagation_bound,
    random_joint,
    sample_complexity,
    simulate_majority,
    simulate_propagation,
    structural_correctness_check,
)

from oracles import binomial_majority_error, entropy


def test_bound_error():
    assert bound_error(0.3, 11) == pytest.approx(math.exp(-0.88), rel=1e-15)
    assert bound_error(0.3, 11) == pytest.approx(0.4148, abs=5e-5)
    assert bound_error(1e-12, 6) == pytest.approx(math.exp(-3))
    assert bound_error(0.2, 0) == 1.0
    with pytest.raises(DomainError):
        bound_error(0.5, 3)


def test_sample_complexity():
    assert sample_complexity(0.3, 0.01) == pytest.approx(57.5646, abs=1e-4)
    assert math.ceil(sample_complexity(0.3, 0.01)) == 58
    assert sample_complexity(0.2, 1.0) == 0.0
    assert sample_complexity(0.0, math.exp(-2)) == pytest.approx(4.0)
    for bad in [(0.5, 0.1), (0.2, 0.0), (0.2, 1.5)]:
        with pytest.raises(DomainError):
            sample_complexity(*bad)


def test_majority_exact_matches_binomial_oracle():
    for p in (0.55, 0.7, 0.8, 0.95):
        for k in (1, 2, 3, 5, 10, 25):
            assert majority_error_exact(p, k) == pytest.approx(binomial_majority_error(p, k), abs=1e-14)
    assert binomial_majority_error(0.8, 5) == pytest.approx(0.05792, abs=1e-12)


def test_simulate_majority_examples():
    r = simulate_majority(SimSpec(k=5, trials=100_000), p_correct=0.8)
    assert abs(r.empirical - 0.05792) <= r.ci_halfwidth
    assert r.theoretical_bound == pytest.approx(math.exp(-0.9))
    assert r.satisfied
    assert simulate_majority(SimSpec(tau=0.0, k=7, trials=2000)).empirical == 0.0
    one = simulate_majority(SimSpec(tau=0.3, k=1, trials=50_000))
    assert abs(one.empirical - 0.3) <= 2 * one.ci_halfwidth
    assert one.theoretical_bound == pytest.approx(math.exp(-0.08))


def test_simulation_is_reproducible_and_job_invariant():
    a = simulate_majority(SimSpec(tau=0.3, k=5, trials=20_000, seed=9))
    b = simulate_majority(SimSpec(tau=0.3, k=5, trials=20_000, seed=9, jobs=4))
    assert a == b
    c = simulate_majority(SimSpec(tau=0.3, k=5, trials=20_000, seed=10))
    assert c.empirical != a.empirical


def test_dag_shapes():
    chain = Dag.chain(5)
    assert (chain.steps, chain.max_in_degree, len(chain.edges)) == (5, 1, 4)
    d = Dag.diamond()
    assert (d.steps, d.max_in_degree, len(d.edges)) == (4, 2, 4)
    r = Dag.parse("random:8,0.3", seed=1)
    assert r.n == 8 and all(a < b for a, b in r.edges)
    assert Dag.parse("chain:3") == Dag.chain(3)
    with pytest.raises(DomainError):
        Dag.parse("tree:4")


def test_propagation_bounds():
    assert propagation_bound(0.1, Dag.chain(5)) == pytest.approx(0.40951, abs=1e-12)
    assert propagation_bound(0.1, Dag.chain(5)) == pytest.approx(exact_final_error(0.1, Dag.chain(5)), abs=1e-15)
    assert propagation_bound(0.17, Dag.chain(1)) == pytest.approx(0.17, abs=1e-15)
    with pytest.raises(BoundInvalidError):
        propagation_bound(0.5, Dag.diamond())


def test_chain_tight_and_other_dags_bounded():
    r = simulate_propagation(SimSpec(epsilon=0.1, dag=Dag.chain(5), trials=100_000))
    assert abs(r.empirical - 0.40951) <= r.ci_halfwidth
    for dag in (Dag.diamond(), Dag.random(8, 0.3, seed=0), Dag.random(10, 0.2, seed=3)):
        res = simulate_propagation(SimSpec(epsilon=0.05, dag=dag, trials=100_000))
        assert res.satisfied
        assert abs(res.empirical - res.details["exact"]) <= 2 * res.ci_halfwidth


def test_intermediate_benefit():
    r = intermediate_benefit(SimSpec(epsilon=0.2, dag=Dag.chain(5), trials=100_000), 0.1)
    assert r.theoretical_bound == pytest.approx((0.9 / 0.8) ** 5)
    assert r.details["exact_ratio"] == pytest.approx((1 - 0.8**5) / (1 - 0.9**5))
    assert abs(r.empirical - r.details["exact_ratio"]) <= r.ci_halfwidth
    # the stated factor is not reached on chains
    assert r.details["exact_ratio"] < r.theoretical_bound
    same = intermediate_benefit(SimSpec(epsilon=0.2, trials=5000), 0.2)
    assert same.theoretical_bound == 1.0 and same.empirical == 1.0
    with pytest.raises(DegenerateError):
        intermediate_benefit(SimSpec(epsilon=0.2, trials=200), 0.0)
    with pytest.raises(DomainError):
        intermediate_benefit(SimSpec(epsilon=0.1), 0.2)


def test_convergence():
    results = convergence_check(SimSpec(tau=0.3, k=50, trials=20_000))
    by_delta = {r.details["delta"]: r for r in results}
    assert by_delta[0.1].theoretical_bound == pytest.approx(2 * math.exp(-1))
    for r in results:
        assert r.satisfied
        assert abs(r.empirical - r.details["exact"]) <= 3 * r.ci_halfwidth + 1e-12
    big = convergence_check(SimSpec(tau=0.3, k=2000, trials=2000), deltas=(0.1,))[0]
    assert big.empirical == 0.0
    assert convergence_check(SimSpec(tau=0.3, k=5, trials=1000), deltas=(1.0,))[0].empirical == 0.0


def test_convergence_exact_against_binomial():
    r = convergence_check(SimSpec(tau=0.3, k=50, trials=10), deltas=(0.1,))[0]
    k, f = 50, 0.7
    exact = sum(stats.binom.pmf(j, k, f) for j in range(k + 1) if abs(j / k - f) > 0.1 + 1e-12)
    assert r.details["exact"] == pytest.approx(exact, abs=1e-12)


def test_entropy_special_cases():
    rng = np.random.default_rng(0)
    ind = random_joint(rng, mode="independent")
    assert conditional_entropy(ind, (1,), (0, 2)) == pytest.approx(conditional_entropy(ind, (1,), (0,)), abs=1e-12)
    cp = random_joint(rng, mode="copy")
    assert conditional_entropy(cp, (1,), (0, 2)) == pytest.approx(0.0, abs=1e-12)
    joint = random_joint(rng)
    pxy = joint.sum(axis=(2, 3, 4))
    assert conditional_entropy(joint, (1,), (0,)) == pytest.approx(entropy(pxy) - entropy(pxy.sum(axis=1)), abs=1e-12)
    gaps = entropy_inequalities(joint)
    assert all(g >= -1e-12 for g in gaps.values())


def test_entropy_suite():
    r = entropy_reduction_check(1000, seed=0)
    assert r.satisfied and r.empirical <= 1e-9


def test_structural_correctness():
    r = structural_correctness_check(trials=200, seed=0)
    assert r.details["rho"] > 0 and r.empirical < 0.01
