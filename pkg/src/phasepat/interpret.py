"""Sliding-window trend indices and semantic labeling of accepted clusters."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .model import N_VARIABLES, VARIABLE_KEYS, ActionPhase, VariableId


class Motion(str, enum.Enum):
    CATCH_UP = "CatchUp"
    KEEP_AWAY = "KeepAway"
    MAINTAIN_DISTANCE = "MaintainDistance"


class State(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"


@dataclass(frozen=True)
class InterpretConfig:
    """``window=None`` picks ``max(5, L_ref // 10)`` samples."""

    window: int | None = None
    tau: float = 0.05
    outlier_frac: float = 0.10

    def __post_init__(self) -> None:
        if self.window is not None and self.window < 2:
            raise ConfigError("trend window must be >= 2 samples")
        if not self.tau > 0:
            raise ConfigError("deadband tau must be positive")
        if not 0 < self.outlier_frac < 1:
            raise ConfigError("outlier_frac must lie in (0, 1)")

    def window_for(self, reference_length: int) -> int:
        return self.window if self.window is not None else max(5, reference_length // 10)


def window_slopes(series: Sequence[float] | np.ndarray, window: int) -> np.ndarray:
    """OLS slope (per sample) at every stride-1 window position."""
    y = np.asarray(series, dtype=float)
    if window < 2:
        raise ValueError("window must be >= 2")
    if y.size < window:
        raise ValueError(f"series of {y.size} samples is shorter than the window ({window})")
    t = np.arange(window, dtype=float)
    t -= t.mean()
    views = np.lib.stride_tricks.sliding_window_view(y, window)
    return views @ t / (t @ t)


def trend_index(series: Sequence[float] | np.ndarray, window: int, sample_period: float) -> float:
    """Mean of the sliding-window OLS slopes, in units per second."""
    return float(window_slopes(series, window).mean() / sample_period)


@dataclass(frozen=True)
class TrendIndex:
    phase_id: str
    slopes: tuple[float, float, float, float]

    def __getitem__(self, var: VariableId | int) -> float:
        return self.slopes[int(var)]


def phase_trend(phase: ActionPhase, window: int) -> TrendIndex:
    # short phases use every sample as one window
    w = min(window, phase.length)
    return TrendIndex(
        phase.id, tuple(trend_index(phase.series[v], w, phase.sample_period) for v in range(N_VARIABLES))
    )


@dataclass(frozen=True)
class BoxSummary:
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: int

    def to_dict(self) -> dict:
        return {
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "outliers": self.outliers,
        }


def box_summary(values: Sequence[float] | np.ndarray) -> BoxSummary:
    """Quartiles and 1.5 x IQR whiskers reaching the farthest non-outlying point."""
    x = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo) & (x <= hi)]
    return BoxSummary(
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        outliers=int(x.size - inside.size),
    )


@dataclass(frozen=True)
class PatternLabel:
    motion: Motion
    state: State
    cluster_id: str
    size: int
    summaries: tuple[BoxSummary, ...]
    outlier_fraction: float
    mixed: bool = False
    medians: tuple[float, float] = field(default=(0.0, 0.0))

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "motion": self.motion.value,
            "state": self.state.value,
            "mixed": self.mixed,
            "size": self.size,
            "median_v": self.medians[0],
            "median_dv": self.medians[1],
            "outlier_fraction": self.outlier_fraction,
            "trend_summary": {k: s.to_dict() for k, s in zip(VARIABLE_KEYS, self.summaries)},
        }


def _motion(v: float, dv: float, tau: float) -> tuple[Motion, bool]:
    if v > tau and dv < -tau:
        return Motion.CATCH_UP, False
    if v < -tau and dv > tau:
        return Motion.KEEP_AWAY, False
    if abs(v) <= tau and abs(dv) <= tau:
        return Motion.MAINTAIN_DISTANCE, False
    # nearest rule: smallest total violation of its inequalities
    shortfall = {
        Motion.CATCH_UP: max(0.0, tau - v) + max(0.0, dv + tau),
        Motion.KEEP_AWAY: max(0.0, v + tau) + max(0.0, tau - dv),
        Motion.MAINTAIN_DISTANCE: max(0.0, abs(v) - tau) + max(0.0, abs(dv) - tau),
    }
    return min(shortfall, key=lambda m: shortfall[m]), True


def label_cluster(
    indices: Iterable[TrendIndex],
    tau: float = 0.05,
    outlier_frac: float = 0.10,
    cluster_id: str = "",
) -> PatternLabel:
    """Motion from the median v and dv trend indices, state from the boxplot outlier share.

    The outlier share pools the v and dv boxplots: outlying entries in both
    divided by twice the cluster size.
    """
    rows = np.array([ti.slopes for ti in indices], dtype=float)
    if rows.size == 0:
        raise ValueError("cannot label an empty cluster")
    summaries = tuple(box_summary(rows[:, v]) for v in range(N_VARIABLES))
    v_med = summaries[VariableId.V].median
    dv_med = summaries[VariableId.DV].median
    motion, mixed = _motion(v_med, dv_med, tau)
    n = rows.shape[0]
    frac = (summaries[VariableId.V].outliers + summaries[VariableId.DV].outliers) / (2 * n)
    return PatternLabel(
        motion=motion,
        state=State.UNSTABLE if frac > outlier_frac else State.STABLE,
        cluster_id=cluster_id,
        size=n,
        summaries=summaries,
        outlier_fraction=float(frac),
        mixed=mixed,
        medians=(v_med, dv_med),
    )


def pattern_overview(labels: Iterable[PatternLabel]) -> dict[str, dict[str, int]]:
    """Pattern sizes cross-tabulated as ``table[state][motion]``; absent cells are 0."""
    table = {s.value: {m.value: 0 for m in Motion} for s in State}
    for lab in labels:
        table[lab.state.value][lab.motion.value] += lab.size
    return table
