"""Core domain types: driving variables, Action phases, libraries and fixed-length phases."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

DEFAULT_SAMPLE_PERIOD = 0.1


class VariableId(enum.IntEnum):
    """The four driving variables, in the fixed order used for every index."""

    V = 0
    A = 1
    D = 2
    DV = 3

    @property
    def key(self) -> str:
        return VARIABLE_KEYS[self]

    @classmethod
    def from_key(cls, key: str) -> "VariableId":
        try:
            return cls(VARIABLE_KEYS.index(key))
        except ValueError:
            raise KeyError(f"unknown variable {key!r}; expected one of {VARIABLE_KEYS}") from None


# velocity (m/s), acceleration (m/s^2), gap to predecessor (m), predecessor minus subject speed (m/s)
VARIABLE_KEYS: tuple[str, ...] = ("v", "a", "d", "dv")
N_VARIABLES = len(VARIABLE_KEYS)


class TrendLabel(str, enum.Enum):
    I = "I"  # increasing
    D = "D"  # decreasing
    H = "H"  # stable at a high value
    L = "L"  # stable at a low value


def _as_series(values: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    arrays = [np.asarray(s, dtype=float) for s in values]
    if len(arrays) != N_VARIABLES:
        raise ValueError(f"expected {N_VARIABLES} series, got {len(arrays)}")
    if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
        raise ValueError("series must be 1-D and of identical length")
    out = np.vstack(arrays)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ActionPhase:
    """One variable-length multivariate segment, stored as a read-only (4, T) array.

    Construction only checks shape; value-level invariants (T >= 2, finiteness,
    positive sample period) are reported by :func:`validate_library` so that
    malformed input can be diagnosed rather than rejected on first failure.
    Use :meth:`from_ragged` when the four channels may disagree in length.
    """

    id: str
    series: np.ndarray
    sample_period: float = DEFAULT_SAMPLE_PERIOD
    labels: tuple[TrendLabel, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "series", _as_series(self.series))
        if self.labels is not None:
            labels = tuple(TrendLabel(x) for x in self.labels)
            if len(labels) != N_VARIABLES:
                raise ValueError(f"phase {self.id}: labels must have {N_VARIABLES} entries")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_ragged(cls, id: str, channels: Sequence[Sequence[float]], **kwargs) -> "ActionPhase | RaggedPhase":
        lengths = [len(c) for c in channels]
        if len(lengths) == N_VARIABLES and len(set(lengths)) == 1:
            return cls(id, channels, **kwargs)
        return RaggedPhase(id, tuple(tuple(float(x) for x in c) for c in channels))

    @property
    def length(self) -> int:
        return int(self.series.shape[1])

    def channel(self, var: VariableId | int) -> np.ndarray:
        return self.series[int(var)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ActionPhase):
            return NotImplemented
        return (
            self.id == other.id
            and self.sample_period == other.sample_period
            and self.labels == other.labels
            and np.array_equal(self.series, other.series)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class RaggedPhase:
    """Placeholder for a phase whose channels disagree in length; never passes validation."""

    id: str
    channels: tuple[tuple[float, ...], ...]
    sample_period: float = DEFAULT_SAMPLE_PERIOD
    labels: None = None

    @property
    def length(self) -> int:
        return min((len(c) for c in self.channels), default=0)


@dataclass(frozen=True)
class PhaseLibrary:
    phases: tuple[ActionPhase, ...]
    source_tag: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", tuple(self.phases))

    def __len__(self) -> int:
        return len(self.phases)

    def __iter__(self) -> Iterator[ActionPhase]:
        return iter(self.phases)

    @property
    def ids(self) -> list[str]:
        return [p.id for p in self.phases]

    def by_id(self) -> dict[str, ActionPhase]:
        return {p.id: p for p in self.phases}

    def lengths(self) -> list[int]:
        return [p.length for p in self.phases]

    def subset(self, ids: Iterable[str]) -> "PhaseLibrary":
        wanted = set(ids)
        return PhaseLibrary(tuple(p for p in self.phases if p.id in wanted), self.source_tag)


@dataclass(frozen=True, eq=False)
class FixedPhase:
    """A phase standardized to the reference length, optionally z-normalized.

    ``normalization`` holds one ``(mean, std)`` pair per variable when
    dataset-level z-normalization was applied, else ``None``.
    """

    origin_id: str
    series: np.ndarray
    normalization: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "series", _as_series(self.series))

    @property
    def length(self) -> int:
        return int(self.series.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FixedPhase):
            return NotImplemented
        return (
            self.origin_id == other.origin_id
            and self.normalization == other.normalization
            and np.array_equal(self.series, other.series)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Violation:
    phase_id: str
    reason: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __str__(self) -> str:
        if self.ok:
            return "library is valid"
        return "\n".join(f"{v.phase_id}: {v.reason}" for v in self.violations)


def _phase_violations(phase: ActionPhase | RaggedPhase) -> list[str]:
    reasons = []
    if isinstance(phase, RaggedPhase):
        lengths = {VARIABLE_KEYS[i]: len(c) for i, c in enumerate(phase.channels[:N_VARIABLES])}
        if len(phase.channels) != N_VARIABLES:
            reasons.append(f"expected {N_VARIABLES} series, got {len(phase.channels)}")
        reasons.append("length mismatch between series: " + ", ".join(f"{k}={n}" for k, n in lengths.items()))
        return reasons
    if phase.length < 2:
        reasons.append(f"phase spans {phase.length} sample(s); at least 2 are required")
    if not np.all(np.isfinite(phase.series)):
        bad = [VARIABLE_KEYS[i] for i in range(N_VARIABLES) if not np.all(np.isfinite(phase.series[i]))]
        reasons.append("non-finite samples in " + ", ".join(bad))
    if not (isinstance(phase.sample_period, (int, float)) and math.isfinite(phase.sample_period) and phase.sample_period > 0):
        reasons.append(f"sample_period must be a positive number, got {phase.sample_period!r}")
    return reasons


def validate_library(lib: PhaseLibrary) -> ValidationReport:
    """List every violated phase invariant; the library is accepted iff the report is empty."""
    violations: list[Violation] = []
    if not lib.phases:
        violations.append(Violation("<library>", "library is empty"))
    counts = Counter(p.id for p in lib.phases)
    for pid, n in counts.items():
        if n > 1:
            violations.append(Violation(pid, f"duplicate phase id ({n} occurrences)"))
    for phase in lib.phases:
        if not isinstance(phase.id, str) or not phase.id:
            violations.append(Violation(repr(phase.id), "phase id must be a non-empty string"))
        for reason in _phase_violations(phase):
            violations.append(Violation(phase.id, reason))
    return ValidationReport(tuple(violations))


def fixed_lookup(fixed: Iterable[FixedPhase]) -> Mapping[str, FixedPhase]:
    return {f.origin_id: f for f in fixed}
