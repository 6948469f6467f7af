"""Monte Carlo checks of the concentration, propagation and entropy bounds.

Trials are drawn in fixed-size blocks; block ``b`` of stream ``s`` is seeded
from ``SeedSequence([seed, s, b])`` so results do not depend on how blocks
are distributed across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .errors import BoundInvalidError, DegenerateError, DomainError

Z95 = 1.959963984540054
BLOCK = 8192

# stream ids keep experiments on independent random streams
_MAJORITY, _PROPAGATION, _CONVERGENCE, _ENTROPY, _STRUCTURE = range(5)


# -- DAG descriptors --------------------------------------------------------------


@dataclass(frozen=True)
class Dag:
    """Nodes ``0..n-1`` in topological order; node ``n-1`` is the conclusion."""

    n: int
    edges: tuple

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("a DAG needs at least one node")
        for u, v in self.edges:
            if not 0 <= u < v < self.n:
                raise DomainError(f"edge {u}->{v} is not forward in node order")
        if len(set(self.edges)) != len(self.edges):
            raise DomainError("duplicate edge")

    @property
    def steps(self) -> int:
        return self.n

    @property
    def max_in_degree(self) -> int:
        indeg = [0] * self.n
        for _, v in self.edges:
            indeg[v] += 1
        return max(indeg)

    def parents(self, v: int) -> list:
        return [u for u, w in self.edges if w == v]

    def ancestors(self, v: int) -> set:
        out, stack = set(), [v]
        while stack:
            for p in self.parents(stack.pop()):
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    @classmethod
    def chain(cls, steps: int) -> "Dag":
        return cls(steps, tuple((i, i + 1) for i in range(steps - 1)))

    @classmethod
    def diamond(cls) -> "Dag":
        return cls(4, ((0, 1), (0, 2), (1, 3), (2, 3)))

    @classmethod
    def random(cls, n: int, p: float, seed: int = 0) -> "Dag":
        rng = np.random.default_rng([seed, 99])
        edges = tuple((i, j) for j in range(n) for i in range(j) if rng.random() < p)
        return cls(n, edges)

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "Dag":
        """``chain:T``, ``diamond`` or ``random:n,p``."""
        name, _, arg = text.partition(":")
        try:
            if name == "chain":
                return cls.chain(int(arg))
            if name == "diamond" and not arg:
                return cls.diamond()
            if name == "random":
                n, p = arg.split(",")
                return cls.random(int(n), float(p), seed)
        except ValueError:
            pass
        raise DomainError(f"bad DAG descriptor {text!r}")


# -- specs and results ----------------------------------------------------------------


@dataclass(frozen=True)
class SimSpec:
    tau: float = 0.2
    epsilon: float = 0.1
    k: int = 5
    trials: int = 10_000
    dag: Dag = field(default_factory=lambda: Dag.chain(5))
    delta_target: float = 0.01
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if self.k < 0:
            raise DomainError("k must be non-negative")
        if not 0.0 <= self.tau <= 1.0 or not 0.0 <= self.epsilon <= 1.0:
            raise DomainError("tau and epsilon are probabilities")


@dataclass(frozen=True)
class SimResult:
    empirical: float
    theoretical_bound: float
    satisfied: bool
    ci_halfwidth: float
    details: dict = field(default_factory=dict, compare=False)

    @classmethod
    def make(cls, empirical, bound, ci, **details) -> "SimResult":
        return cls(float(empirical), float(bound), bool(empirical <= bound + ci), float(ci), details)


def proportion_ci(p_hat: float, n: int) -> float:
    """95% normal-approximation half-width for a proportion."""
    return Z95 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)


def _blocks(seed: int, stream: int, trials: int):
    for b, start in enumerate(range(0, trials, BLOCK)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream, b])))
        yield rng, min(BLOCK, trials - start)


def _count(fn, seed, stream, trials, jobs=1) -> int:
    """Sum ``fn(rng, n)`` over the seeded blocks."""
    blocks = list(_blocks(seed, stream, trials))
    if jobs > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return int(sum(pool.map(lambda b: fn(*b), blocks)))
    return int(sum(fn(rng, n) for rng, n in blocks))


# -- closed-form bounds -----------------------------------------------------------------


def bound_error(tau: float, k: int) -> float:
    """Majority-vote error bound ``exp(-k (1 - 2 tau)^2 / 2)``."""
    if not tau < 0.5:
        raise DomainError(f"the majority bound needs tau < 0.5, got {tau}")
    return math.exp(-k * (1.0 - 2.0 * tau) ** 2 / 2.0)


def sample_complexity(tau: float, delta: float) -> float:
    """Samples needed for error at most ``delta``: ``2 ln(1/delta) / (1 - 2 tau)^2``."""
    if not tau < 0.5:
        raise DomainError(f"sample complexity needs tau < 0.5, got {tau}")
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta must lie in (0, 1], got {delta}")
    return 2.0 * math.log(1.0 / delta) / (1.0 - 2.0 * tau) ** 2


def propagation_bound(epsilon: float, dag: Dag) -> float:
    """``1 - (1-eps)^T (1 - d eps)^(|E| - T + 1)``."""
    d = dag.max_in_degree
    if d * epsilon >= 1.0:
        raise BoundInvalidError(f"d*epsilon = {d * epsilon:g} >= 1; the bound is not meaningful")
    t, e = dag.steps, len(dag.edges)
    return 1.0 - (1.0 - epsilon) ** t * (1.0 - d * epsilon) ** (e - t + 1)


def exact_final_error(epsilon: float, dag: Dag) -> float:
    """Exact final error under worst-case propagation: any erroneous ancestor."""
    m = len(dag.ancestors(dag.n - 1)) + 1
    return 1.0 - (1.0 - epsilon) ** m


def majority_error_exact(p_correct: float, k: int) -> float:
    """P(at most k/2 of k samples are correct)."""
    return float(stats.binom.cdf(k // 2, k, p_correct))


# -- simulations -------------------------------------------------------------------------


def simulate_majority(spec: SimSpec, p_correct: float | None = None) -> SimResult:
    """Fraction of trials whose majority of ``k`` Bernoulli draws is wrong.

    Each draw is correct with probability ``1 - tau`` (or ``p_correct``).
    A tie counts as an error.
    """
    p = 1.0 - spec.tau if p_correct is None else p_correct
    k = spec.k

    def run(rng, n):
        if k == 0:
            return n
        correct = (rng.random((n, k)) < p).sum(axis=1)
        return int(np.count_nonzero(correct <= k / 2))

    errors = _count(run, spec.seed, _MAJORITY, spec.trials, spec.jobs)
    emp = errors / spec.trials
    p_incorrect = 1.0 - p
    if p_incorrect < 0.5:
        bound = math.exp(-k * (p - p_incorrect) ** 2 / 2.0)
    else:
        bound = 1.0
    return SimResult.make(
        emp, bound, proportion_ci(emp, spec.trials),
        k=k, p_correct=p, trials=spec.trials, exact=majority_error_exact(p, k) if k else 1.0,
    )


def _propagation_errors(dag: Dag, epsilon: float, rng, n) -> int:
    direct = rng.random((n, dag.n)) < epsilon
    err = np.zeros_like(direct)
    for v in range(dag.n):
        e = direct[:, v].copy()
        for u in dag.parents(v):
            e |= err[:, u]
        err[:, v] = e
    return int(np.count_nonzero(err[:, dag.n - 1]))


def simulate_propagation(spec: SimSpec) -> SimResult:
    """Empirical conclusion error on ``spec.dag`` with per-step error ``epsilon``."""
    bound = propagation_bound(spec.epsilon, spec.dag)
    errors = _count(lambda rng, n: _propagation_errors(spec.dag, spec.epsilon, rng, n),
                    spec.seed, _PROPAGATION, spec.trials, spec.jobs)
    emp = errors / spec.trials
    return SimResult.make(
        emp, bound, proportion_ci(emp, spec.trials),
        steps=spec.dag.steps, max_in_degree=spec.dag.max_in_degree, edges=len(spec.dag.edges),
        epsilon=spec.epsilon, exact=exact_final_error(spec.epsilon, spec.dag), trials=spec.trials,
    )


def intermediate_benefit(spec: SimSpec, epsilon_prime: float) -> SimResult:
    """Ratio of conclusion error at ``epsilon`` to that at ``epsilon_prime``.

    ``theoretical_bound`` holds the factor ``((1-eps')/(1-eps))^T``. Both
    error rates are simulated on common random numbers. ``details`` carries
    the exact ratio and whether the ratio reaches the factor.
    """
    if epsilon_prime > spec.epsilon:
        raise DomainError("epsilon_prime must not exceed epsilon")
    dag = spec.dag
    pairs = [
        (_propagation_errors(dag, spec.epsilon, rng, n),
         _propagation_errors(dag, epsilon_prime, np.random.Generator(np.random.PCG64(rng.bit_generator.seed_seq)), n))
        for rng, n in _blocks(spec.seed, _PROPAGATION, spec.trials)
    ]
    hi = sum(a for a, _ in pairs) / spec.trials
    lo = sum(b for _, b in pairs) / spec.trials
    if lo == 0:
        raise DegenerateError(f"no conclusion errors at epsilon'={epsilon_prime} over {spec.trials} trials")
    ratio = hi / lo
    factor = ((1.0 - epsilon_prime) / (1.0 - spec.epsilon)) ** dag.steps
    # delta-method half-width, treating the two proportions as independent
    var_hi = (1 - hi) / (spec.trials * hi) if hi else 0.0
    var_lo = (1 - lo) / (spec.trials * lo)
    ci = Z95 * ratio * math.sqrt(var_hi + var_lo)
    exact_ratio = exact_final_error(spec.epsilon, dag) / exact_final_error(epsilon_prime, dag)
    return SimResult.make(
        ratio, factor, ci,
        exact_ratio=exact_ratio, factor_reached=bool(ratio + ci >= factor),
        error_at_epsilon=hi, error_at_epsilon_prime=lo, trials=spec.trials,
    )


def _decimal(x) -> Fraction:
    return Fraction(repr(float(x)))


def convergence_check(spec: SimSpec, deltas=(0.05, 0.1, 0.2), f_true: float | None = None) -> list:
    """P(|f - f_hat| > delta) against ``2 exp(-2 k delta^2)`` for each delta.

    ``f_true`` defaults to ``1 - tau``; ``f_hat`` is the mean of ``k``
    Bernoulli(f_true) indicators.
    """
    f = 1.0 - spec.tau if f_true is None else f_true
    k = spec.k
    out = []
    for i, delta in enumerate(deltas):
        # |j/k - f| > delta  <=>  j < k (f - delta)  or  j > k (f + delta), decided exactly
        fq, dq = _decimal(f), _decimal(delta)
        lo = math.ceil(k * (fq - dq)) - 1  # largest count deviating below
        hi = math.floor(k * (fq + dq)) + 1  # smallest count deviating above

        def run(rng, n, lo=lo, hi=hi):
            if k == 0:
                return 0
            j = rng.binomial(k, f, size=n)
            return int(np.count_nonzero((j <= lo) | (j >= hi)))

        dev = _count(run, spec.seed, 100 * _CONVERGENCE + i, spec.trials, spec.jobs)
        emp = dev / spec.trials
        bound = 2.0 * math.exp(-2.0 * k * delta**2)
        exact = float(stats.binom.cdf(lo, k, f) + stats.binom.sf(hi - 1, k, f)) if k else 0.0
        out.append(SimResult.make(emp, bound, proportion_ci(emp, spec.trials),
                                  k=k, delta=delta, f_true=f, exact=exact, trials=spec.trials))
    return out


# -- entropy ---------------------------------------------------------------------------


def _h(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def conditional_entropy(joint: np.ndarray, target: tuple, given: tuple) -> float:
    """H(target | given) in nats for a joint probability table."""
    axes = tuple(range(joint.ndim))
    keep_tg = tuple(sorted(set(target) | set(given)))
    p_tg = joint.sum(axis=tuple(a for a in axes if a not in keep_tg))
    p_g = joint.sum(axis=tuple(a for a in axes if a not in given)) if given else np.array(1.0)
    return _h(p_tg.ravel()) - (_h(np.atleast_1d(p_g).ravel()) if given else 0.0)


def conditional_mutual_information(joint: np.ndarray, a: int, b: int, given: tuple) -> float:
    """I(A; B | given) computed directly from the log-ratio sum."""
    axes = tuple(range(joint.ndim))
    keep = tuple(sorted({a, b, *given}))
    p_abz = joint.sum(axis=tuple(x for x in axes if x not in keep))
    idx = {ax: i for i, ax in enumerate(keep)}
    p_az = p_abz.sum(axis=idx[b], keepdims=True)
    p_bz = p_abz.sum(axis=idx[a], keepdims=True)
    p_z = p_abz.sum(axis=(idx[a], idx[b]), keepdims=True)
    mask = p_abz > 0
    num = (p_abz * p_z)[mask]
    den = np.broadcast_to(p_az * p_bz, p_abz.shape)[mask]
    return float((p_abz[mask] * np.log(num / den)).sum())


def random_joint(rng, x_values=2, y_values=4, constraint_values=(2, 3, 2), mode="random") -> np.ndarray:
    """Joint table over axes (X, Y, C1..Cn).

    ``mode`` is ``random`` (Dirichlet), ``independent`` (constraints
    independent of Y given X) or ``copy`` (C1 equals Y, rest random).
    """
    n = len(constraint_values)
    shape = (x_values, y_values, *constraint_values)
    if mode == "random":
        return rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    p_xy = rng.dirichlet(np.ones(x_values * y_values)).reshape(x_values, y_values)
    if mode == "independent":
        joint = p_xy.reshape(x_values, y_values, *([1] * n))
        for i, c in enumerate(constraint_values):
            pc = rng.dirichlet(np.ones(c * x_values)).reshape(x_values, c)
            pc = pc / pc.sum(axis=1, keepdims=True)
            sh = [x_values, 1] + [1] * n
            sh[2 + i] = c
            joint = joint * pc.reshape(sh)
        return joint
    if mode == "copy":
        shape = (x_values, y_values, y_values, *constraint_values[1:])
        joint = np.zeros(shape)
        rest = rng.dirichlet(np.ones(int(np.prod(constraint_values[1:])) or 1)).reshape(constraint_values[1:])
        for x in range(x_values):
            for y in range(y_values):
                joint[x, y, y] = p_xy[x, y] * rest
        return joint
    raise ValueError(mode)


def entropy_inequalities(joint: np.ndarray) -> dict:
    """Gaps (rhs - lhs) for each hierarchical entropy inequality; all must be >= 0."""
    n = joint.ndim - 2
    y, x = 1, 0
    cs = tuple(range(2, 2 + n))
    h = [conditional_entropy(joint, (y,), (x, *cs[:i])) for i in range(n + 1)]
    mi = [conditional_mutual_information(joint, y, cs[i], (x, *cs[:i])) for i in range(n)]
    gaps = {}
    for i in range(1, n + 1):
        gaps[f"step{i}"] = h[i - 1] - h[i]
        gaps[f"theorem{i}"] = (h[i - 1] - mi[i - 1]) - h[i]
        gaps[f"mi{i}"] = mi[i - 1]
    gaps["cumulative"] = (h[0] - sum(mi)) - h[n]
    return gaps


def entropy_reduction_check(trials: int, seed: int = 0, tolerance: float = 1e-9) -> SimResult:
    """Check the conditional-entropy inequalities on random joint distributions.

    ``empirical`` is the largest violation found (negative gap, sign-flipped);
    the check passes when it stays within ``tolerance``.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    modes = ("random", "independent", "copy")
    worst = -math.inf
    checks = 0
    for trial in range(trials):
        rng = np.random.default_rng([seed, _ENTROPY, trial])
        mode = modes[trial % 3] if trial % 5 == 4 else "random"
        gaps = entropy_inequalities(random_joint(rng, mode=mode))
        checks += len(gaps)
        worst = max(worst, max(-g for g in gaps.values()))
    return SimResult.make(max(worst, 0.0), tolerance, 0.0, trials=trials, checks=checks)


# -- structural agreement vs correctness ----------------------------------------------------


def structural_correctness_check(trials: int = 400, seed: int = 0, k: int = 5, truth=None) -> SimResult:
    """Spearman correlation between psi and consensus correctness on mock trace sets.

    ``empirical`` is the one-sided p-value for a positive correlation; the
    check passes at ``p <= 0.01`` with ``rho > 0``. Decile means of
    correctness are reported in ``details``.
    """
    from .consistency import ScoringConfig, full_report
    from .sampler import MockBackend, select_consensus
    from .traces import TraceSet

    truth = truth or default_truth()
    config = ScoringConfig(seed=seed)
    psis, correct = [], []
    for trial in range(trials):
        rng = np.random.default_rng([seed, _STRUCTURE, trial])
        tau = float(rng.uniform(0.0, 0.5))
        backend = MockBackend(truth, tau, seed=int(rng.integers(0, 2**31)))
        ts = TraceSet(truth.query, tuple(backend.generate(truth.query, i) for i in range(k)))
        report = full_report(ts, config)
        psis.append(report.global_)
        correct.append(float(select_consensus(ts, report).final_answer == truth.final_answer))
    psis, correct = np.array(psis), np.array(correct)
    rho, p_two = stats.spearmanr(psis, correct)
    p_one = p_two / 2 if rho > 0 else 1.0 - p_two / 2
    order = np.argsort(psis, kind="stable")
    deciles = [float(correct[chunk].mean()) for chunk in np.array_split(order, 10)]
    res = SimResult.make(p_one, 0.01, 0.0, rho=float(rho), decile_means=deciles, trials=trials)
    if not rho > 0:
        res = SimResult(res.empirical, res.theoretical_bound, False, 0.0, res.details)
    return res


def default_truth():
    """A five-step chain used as ground truth by the mock generator."""
    from .traces import ReasoningTrace, Statement

    texts = [
        "let x be the number of apples in one basket",
        "three baskets hold 3x apples in total",
        "the total number of apples is 126 so 3x = 126",
        "dividing both sides of 3x = 126 by 3",
        "therefore x = 42 apples per basket",
    ]
    stmts = tuple(Statement(f"s{i}", t, "claim") for i, t in enumerate(texts))
    edges = tuple((f"s{i}", f"s{i + 1}") for i in range(len(texts) - 1))
    return ReasoningTrace("truth", "How many apples are in one basket?", stmts, edges, "42")
