"""Dispersion-based consistency for numerical answers."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptySampleError

log = logging.getLogger(__name__)

MU_EPS = 1e-12


@dataclass(frozen=True)
class NumericSample:
    values: tuple
    mean: float
    std: float
    score: float


def _as_array(values, what="values") -> np.ndarray:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise EmptySampleError(f"{what} must be non-empty")
    return arr


def sc_numerical(values) -> NumericSample:
    """``clamp(1 - sigma/|mu|, 0, 1)`` with the population standard deviation.

    Constant samples score 1 (including all zeros); a zero mean with any
    spread scores 0.
    """
    arr = _as_array(values)
    mu = float(arr.mean())
    if np.all(arr == arr[0]):
        return NumericSample(tuple(arr.tolist()), mu, 0.0, 1.0)
    sigma = float(arr.std())
    if abs(mu) < MU_EPS:
        score = 0.0 if sigma > 0 else 1.0
    else:
        score = min(1.0, max(0.0, 1.0 - sigma / abs(mu)))
    return NumericSample(tuple(arr.tolist()), mu, sigma, score)


def variance_reduction(before, after) -> float:
    """``1 - var(after) / var(before)``; 0 with a warning when ``before`` is constant."""
    b = _as_array(before, "before")
    a = _as_array(after, "after")
    vb = float(b.var())
    if vb == 0.0:
        log.warning("variance of the reference sample is zero; reduction defined as 0")
        return 0.0
    return 1.0 - float(a.var()) / vb


def threshold_consistency(values, rel_tol: float = 1e-6) -> float:
    """Fraction of values within ``rel_tol`` (relative) of the sample median."""
    arr = _as_array(values)
    med = float(np.median(arr))
    tol = rel_tol * max(abs(med), MU_EPS)
    return float(np.mean(np.abs(arr - med) <= tol))
