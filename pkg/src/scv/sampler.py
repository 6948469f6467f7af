"""Adaptive self-consistency sampling over pluggable generator backends."""

from __future__ import annotations

import logging
import math
import os
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .consistency import ConsistencyReport, ScoringConfig, full_report
from .errors import BackendError, DomainError, SCVError
from .traces import ReasoningTrace, Statement, TraceSet, build_graph, trace_from_dict

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplerConfig:
    k0: int = 3
    k_max: int = 10
    tau_low: float = 0.5
    tau_high: float = 0.6
    rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k0 < 1 or self.k_max < 1:
            raise DomainError("k0 and k_max must be positive")
        if self.k0 > self.k_max:
            raise DomainError(f"k0={self.k0} exceeds k_max={self.k_max}")
        for name in ("tau_low", "tau_high"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
        if self.tau_low > self.tau_high:
            raise DomainError("tau_low must not exceed tau_high")
        if not self.rate > 0:
            raise DomainError("rate must be positive")


def _exact(x) -> Fraction:
    # decimal literal semantics, so 0.6 - 0.4 is exactly 1/5
    return Fraction(repr(float(x))) if isinstance(x, float) else Fraction(x)


def step_size(lambda_t: float, config: SamplerConfig) -> int:
    """``max(1, ceil(rate * (tau_low - min(lambda_t, tau_low)) * k_max))``."""
    if not 0.0 <= lambda_t <= 1.0:
        raise DomainError(f"consistency score must lie in [0, 1], got {lambda_t}")
    gap = _exact(config.tau_low) - min(_exact(lambda_t), _exact(config.tau_low))
    return max(1, math.ceil(_exact(config.rate) * gap * config.k_max))


# -- backends ---------------------------------------------------------------------


class MockBackend:
    """Seeded corruptor of a ground-truth trace.

    Each statement is independently corrupted with probability ``corruption``;
    corruption propagates to every descendant. The final answer is wrong
    whenever the last statement in topological order is corrupted.
    """

    kind = "mock"

    def __init__(self, truth: ReasoningTrace, corruption: float, seed: int = 0, wrong_answers: int = 4):
        if not 0.0 <= corruption <= 1.0:
            raise DomainError(f"corruption rate must lie in [0, 1], got {corruption}")
        self.truth = truth
        self.corruption = corruption
        self.seed = seed
        self.wrong_answers = wrong_answers
        self._graph = build_graph(truth)

    def _rng(self, sample_index):
        return np.random.default_rng([self.seed, sample_index])

    def _corrupt(self, s: Statement, rng) -> Statement:
        if s.kind == "numeric":
            offset = int(rng.integers(1, 1000)) * (1 if rng.random() < 0.5 else -1)
            value = s.value + offset
            return Statement(s.id, f"{s.text} [{value:g}]", "numeric", value=value, rule=s.rule, premises=s.premises)
        if s.kind == "expression":
            a, b, c = (int(x) for x in rng.integers(100, 1000, size=3))
            return Statement(s.id, f"{a}*{b}-{c}", "expression", rule=s.rule, premises=s.premises)
        words = " ".join(f"e{int(x):05x}" for x in rng.integers(0, 1 << 20, size=4))
        return Statement(s.id, f"erroneous {words}", s.kind, rule=s.rule, premises=s.premises)

    def _wrong_answer(self, rng) -> str:
        pick = int(rng.integers(1, self.wrong_answers + 1))
        try:
            value = float(self.truth.final_answer)
        except ValueError:
            return f"wrong-{pick}"
        return f"{value + pick:g}"

    def sample(self, query: str, sample_index: int) -> tuple[ReasoningTrace, bool]:
        """Return ``(trace, answer_correct)`` for one sample."""
        rng = self._rng(sample_index)
        direct = {sid: rng.random() < self.corruption for sid in self._graph.order}
        bad = {}
        for sid in self._graph.order:
            bad[sid] = direct[sid] or any(bad[p] for p in self._graph.parents[sid])
        statements = tuple(self._corrupt(s, rng) if bad[s.id] else s for s in self.truth.statements)
        final_bad = bool(self._graph.order) and bad[self._graph.order[-1]]
        answer = self._wrong_answer(rng) if final_bad else self.truth.final_answer
        trace = ReasoningTrace(
            trace_id=f"s{sample_index:03d}",
            query=query,
            statements=statements,
            edges=self.truth.edges,
            final_answer=answer,
        )
        return trace, not final_bad

    def generate(self, query: str, sample_index: int) -> ReasoningTrace:
        return self.sample(query, sample_index)[0]


class HttpBackend:
    """Generic HTTP generator.

    POSTs ``{query, sample_index, request_id}`` to ``url`` with a bearer token
    and expects a trace object in the response body. The request id is
    derived from (seed, query, sample_index), so retries are idempotent.
    """

    kind = "http"

    def __init__(self, url: str | None = None, token: str | None = None, seed: int = 0,
                 attempts: int = 3, backoff: float = 0.5, timeout: float = 30.0, jobs: int = 1,
                 session=None):
        self.url = url or os.environ.get("SCV_GEN_URL")
        if not self.url:
            raise DomainError("http backend needs a URL (SCV_GEN_URL)")
        self.token = token if token is not None else os.environ.get("SCV_GEN_TOKEN")
        self.seed = seed
        self.attempts = attempts
        self.backoff = backoff
        self.timeout = timeout
        self.jobs = max(1, jobs)
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def request_id(self, query: str, sample_index: int) -> str:
        return str(uuid.uuid5(uuid.NAMESPACE_URL, f"scv:{self.seed}:{query}:{sample_index}"))

    def generate(self, query: str, sample_index: int) -> ReasoningTrace:
        import requests

        body = {"query": query, "sample_index": sample_index, "request_id": self.request_id(query, sample_index)}
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        last = None
        for attempt in range(self.attempts):
            try:
                resp = self.session.post(self.url, json=body, headers=headers, timeout=self.timeout)
                if resp.status_code == 429 or resp.status_code >= 500:
                    last = f"HTTP {resp.status_code}"
                else:
                    resp.raise_for_status()
                    return trace_from_dict(resp.json(), query, where=f"sample {sample_index}")
            except requests.HTTPError as exc:
                raise BackendError(f"generator rejected request: {exc}", sample_index=sample_index) from exc
            except requests.RequestException as exc:
                last = str(exc)
            except (ValueError, SCVError) as exc:
                raise BackendError(f"bad trace from generator: {exc}", sample_index=sample_index) from exc
            if attempt + 1 < self.attempts:
                time.sleep(self.backoff * 2**attempt)
        raise BackendError(f"generator failed after {self.attempts} attempts: {last}", sample_index=sample_index)


# -- sampling loop ----------------------------------------------------------------


@dataclass(frozen=True)
class SamplerOutcome:
    traces: TraceSet
    rounds: tuple  # (t, lambda_t, samples drawn this round)
    stop_reason: str
    total_samples: int
    consensus: ReasoningTrace
    report: ConsistencyReport


def select_consensus(traces: TraceSet, report: ConsistencyReport) -> ReasoningTrace:
    """Trace with the highest mean statement score; ties go to the smallest trace_id."""
    return min(traces.traces, key=lambda t: (-report.mean_atomic(t), t.trace_id))


def _draw(backend, query, start, count, round_index):
    indices = range(start, start + count)
    jobs = getattr(backend, "jobs", 1)
    try:
        if jobs > 1 and count > 1:
            with ThreadPoolExecutor(max_workers=min(jobs, count)) as pool:
                out = list(pool.map(lambda i: backend.generate(query, i), indices))
        else:
            out = [backend.generate(query, i) for i in indices]
    except BackendError as exc:
        exc.round_index = round_index
        raise BackendError(f"round {round_index}: {exc}", round_index, exc.sample_index) from exc
    seen = set()
    fixed = []
    for i, t in zip(indices, out):
        if t.trace_id in seen:
            t = replace(t, trace_id=f"{t.trace_id}#{i}")
        seen.add(t.trace_id)
        fixed.append(t)
    return fixed


def run_adaptive(query: str, backend, config: SamplerConfig, scorer=None, domain: str = "generic") -> SamplerOutcome:
    """Sample until the combined score exceeds ``tau_high`` or the budget runs out."""
    if scorer is None:
        scoring = ScoringConfig(seed=config.seed)

        def scorer(ts):
            return full_report(ts, scoring, degenerate="mark")

    traces = _draw(backend, query, 0, config.k0, 0)
    ids = {t.trace_id for t in traces}
    t = config.k0
    ts = TraceSet(query, tuple(traces), domain)
    report = scorer(ts)
    lam = report.combined
    rounds = [(t, lam, config.k0)]
    while t < config.k_max and lam <= config.tau_high:
        delta = min(step_size(lam, config), config.k_max - t)
        new = _draw(backend, query, t, delta, len(rounds))
        for tr in new:
            if tr.trace_id in ids:
                tr = replace(tr, trace_id=f"{tr.trace_id}#{t}")
            ids.add(tr.trace_id)
            traces.append(tr)
        t += delta
        ts = TraceSet(query, tuple(traces), domain)
        report = scorer(ts)
        lam = report.combined
        rounds.append((t, lam, delta))
    stop = "high_consistency" if lam > config.tau_high else "budget_exhausted"
    return SamplerOutcome(ts, tuple(rounds), stop, t, select_consensus(ts, report), report)
