"""Score a trace set, adding the block for its declared domain."""

from __future__ import annotations

import logging
import math

from .consistency import ScoringConfig, full_report, psi_global
from .errors import DegenerateSampleError
from .numeric import sc_numerical, threshold_consistency
from .symbolic.score import sc_symbolic
from .theorem import check_soundness, combine_theorem, step_validity
from .traces import TraceSet

log = logging.getLogger(__name__)


def _theorem_block(traces, config, beta, warnings):
    if traces.k < 2:
        warnings.append("single trace: proof consistency reported as 1.0")
        sc_proof = 1.0
    else:
        sc_proof = psi_global(traces, config=config)
    soundness = sum(check_soundness(t) for t in traces.traces) / traces.k
    score = combine_theorem(sc_proof, soundness, beta)
    return {
        "sc_proof": score.sc_proof,
        "soundness": score.soundness,
        "beta": score.beta,
        "combined": score.combined,
        "steps": {t.trace_id: step_validity(t) for t in traces.traces},
    }


def _symbolic_block(traces, lam, seed, warnings):
    try:
        s = sc_symbolic(traces, lam, seed=seed)
    except DegenerateSampleError as exc:
        warnings.append(f"symbolic score degenerate ({exc}); reported as 1.0")
        return {"tree_similarity": 1.0, "algebraic_equivalence": 1.0, "lambda": lam, "combined": 1.0,
                "domain_caveat": False, "degenerate": True}
    if s.excluded:
        warnings.append(f"unparseable final answers excluded: {', '.join(s.excluded)}")
    return {"tree_similarity": s.tree_similarity, "algebraic_equivalence": s.algebraic_equivalence,
            "lambda": s.lam, "combined": s.combined, "domain_caveat": s.domain_caveat,
            "excluded": list(s.excluded)}


def _numeric_block(traces, rel_tol, warnings):
    values = []
    for t in traces.traces:
        try:
            v = float(t.final_answer)
        except ValueError:
            warnings.append(f"trace {t.trace_id}: final answer is not a number; excluded")
            continue
        if math.isfinite(v):
            values.append(v)
    if not values:
        warnings.append("no numeric final answers")
        return {"score": None}
    s = sc_numerical(values)
    return {"mean": s.mean, "std": s.std, "score": s.score,
            "threshold_consistency": threshold_consistency(values, rel_tol), "rel_tol": rel_tol}


def verify(traces: TraceSet, config: ScoringConfig | None = None, beta: float = 0.5, lam: float = 0.5,
           rel_tol: float = 1e-6) -> tuple:
    """Return ``(summary, report)``: a JSON-ready dict with domain scores, and the report."""
    config = config or ScoringConfig()
    warnings = []
    report = full_report(traces, config, degenerate="mark")
    if report.degenerate:
        warnings.append("single trace: psi and phi reported as 1.0")
    out = {
        "query": traces.query,
        "domain": traces.domain,
        "k": traces.k,
        "report": report.to_dict(),
    }
    if traces.domain == "theorem":
        out["theorem"] = _theorem_block(traces, config, beta, warnings)
    elif traces.domain == "symbolic":
        out["symbolic"] = _symbolic_block(traces, lam, config.seed, warnings)
    elif traces.domain == "numeric":
        out["numeric"] = _numeric_block(traces, rel_tol, warnings)
    out["warnings"] = warnings
    return out, report
