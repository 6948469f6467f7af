"""Hierarchical self-consistency scoring for sampled reasoning traces."""

from .consistency import ConsistencyReport, ScoringConfig, full_report, lambda_combined, phi_entropy, psi_global
from .equivalence import AlignmentMap, SimilarityProvider, align, make_provider
from .errors import SCVError, ValidationError
from .iso import IsoResult, iso, iso_exact, iso_spectral
from .numeric import sc_numerical, threshold_consistency, variance_reduction
from .repair import repair_trace
from .sampler import HttpBackend, MockBackend, SamplerConfig, run_adaptive
from .theorem import sc_theorem
from .traces import ReasoningGraph, ReasoningTrace, Statement, TraceSet, build_graph, parse_trace_set
from .verify import verify

__version__ = "0.1.0"

__all__ = [
    "AlignmentMap",
    "ConsistencyReport",
    "HttpBackend",
    "IsoResult",
    "MockBackend",
    "ReasoningGraph",
    "ReasoningTrace",
    "SCVError",
    "SamplerConfig",
    "ScoringConfig",
    "SimilarityProvider",
    "Statement",
    "TraceSet",
    "ValidationError",
    "align",
    "build_graph",
    "full_report",
    "iso",
    "iso_exact",
    "iso_spectral",
    "lambda_combined",
    "make_provider",
    "parse_trace_set",
    "phi_entropy",
    "psi_global",
    "repair_trace",
    "run_adaptive",
    "sc_numerical",
    "sc_theorem",
    "threshold_consistency",
    "variance_reduction",
    "verify",
]
