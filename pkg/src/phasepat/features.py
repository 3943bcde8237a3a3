"""Per-phase PCA feature extraction, optionally weighted by variable importance."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateDataError
from .model import N_VARIABLES, FixedPhase

log = logging.getLogger(__name__)

UNIFORM_WEIGHTS = (1.0, 1.0, 1.0, 1.0)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    origin_id: str
    values: np.ndarray
    pc1_contribution: float
    weights_used: tuple[float, ...]
    eigenvalues: tuple[float, ...] = ()


def normalize_weights(weights: Sequence[float]) -> tuple[float, ...]:
    w = np.asarray(weights, dtype=float)
    if w.shape != (N_VARIABLES,):
        raise ValueError(f"expected {N_VARIABLES} weights, got {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError(f"weights must be finite and non-negative, got {list(w)}")
    top = w.max()
    if top <= 0:
        raise ValueError("at least one weight must be positive")
    return tuple(float(x) for x in w / top)


def extract_pc1(phase: FixedPhase, weights: Sequence[float] = UNIFORM_WEIGHTS) -> FeatureVector:
    """Score series of the phase on its leading principal component.

    The phase is read as ``L`` observations of four variables. Columns are
    centered, scaled by the (max-normalized) weights, and the covariance is
    eigendecomposed. The eigenvector sign is chosen so the score series has
    non-negative correlation with the weighted-sum series; exact ties fall
    back to a positive first non-zero loading.
    """
    w = normalize_weights(weights)
    data = phase.series.T  # (L, 4)
    centered = data - data.mean(axis=0)
    weighted = centered * np.asarray(w)
    cov = weighted.T @ weighted / max(len(weighted) - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals[::-1], 0.0, None)
    evecs = evecs[:, ::-1]
    total = float(evals.sum())
    magnitude = float(np.abs(weighted).max(initial=0.0)) ** 2
    if magnitude == 0.0 or total <= 1e-14 * magnitude:
        raise DegenerateDataError(f"phase {phase.origin_id!r} has no variance under weights {list(w)}")
    lead = evecs[:, 0]
    scores = weighted @ lead
    agreement = float(np.dot(scores - scores.mean(), weighted.sum(axis=1)))
    scale = float(np.abs(scores).sum()) * float(np.abs(weighted).sum()) or 1.0
    if abs(agreement) <= 1e-12 * scale:
        nonzero = lead[np.abs(lead) > 1e-12]
        flip = nonzero.size > 0 and nonzero[0] < 0
    else:
        flip = agreement < 0
    if flip:
        scores = -scores
    scores = scores + 0.0  # drop negative zeros
    return FeatureVector(
        origin_id=phase.origin_id,
        values=scores,
        pc1_contribution=min(1.0, float(evals[0] / total)),
        weights_used=w,
        eigenvalues=tuple(float(x) for x in evals),
    )


def extract_all(fixed: Iterable[FixedPhase], weights: Sequence[float] = UNIFORM_WEIGHTS) -> list[FeatureVector]:
    return [extract_pc1(f, weights) for f in fixed]


@dataclass(frozen=True)
class ContributionSummary:
    quantiles: dict[str, float]
    floor: float
    warning: bool


SUMMARY_QUANTILES = (0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0)


def pc1_contribution_summary(features: Iterable[FeatureVector], floor: float = 0.5) -> ContributionSummary:
    """Quantiles of PC1 contribution; warns when the 10th percentile falls below ``floor``."""
    values = np.array([f.pc1_contribution for f in features], dtype=float)
    if values.size == 0:
        raise ValueError("no features to summarize")
    qs = np.quantile(values, SUMMARY_QUANTILES)
    quantiles = {f"q{int(round(q * 100)):02d}": float(v) for q, v in zip(SUMMARY_QUANTILES, qs)}
    warn = quantiles["q10"] < floor
    if warn:
        log.warning("PC1 explains less than %.2f of the variance for over 10%% of phases (q10=%.3f)", floor, quantiles["q10"])
    return ContributionSummary(quantiles, floor, warn)
