"""Length standardization: FFT resampling of short phases, isometric index extraction of long ones."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import ConfigError, DegenerateDataError, InputError
from .model import N_VARIABLES, VARIABLE_KEYS, ActionPhase, FixedPhase, PhaseLibrary

Stats = tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class RdmConfig:
    """``reference`` is ``"median"`` or a fixed integer length >= 2."""

    reference: Literal["median"] | int = "median"
    normalization: Literal["none", "zscore"] = "zscore"

    def __post_init__(self) -> None:
        if self.reference != "median":
            if isinstance(self.reference, bool) or not isinstance(self.reference, int) or self.reference < 2:
                raise ConfigError(f"fixed reference length must be an integer >= 2, got {self.reference!r}")
        if self.normalization not in ("none", "zscore"):
            raise ConfigError(f"unknown normalization {self.normalization!r}")


def reference_length(lib: PhaseLibrary | Sequence[int], cfg: RdmConfig = RdmConfig()) -> int:
    """Lower median of the phase lengths, or the configured fixed length."""
    lengths = lib.lengths() if isinstance(lib, PhaseLibrary) else list(lib)
    if not lengths:
        raise InputError("cannot take a reference length of an empty library")
    if cfg.reference != "median":
        return int(cfg.reference)
    ordered = sorted(lengths)
    ref = int(ordered[(len(ordered) - 1) // 2])
    if ref < 2:
        raise InputError(f"median phase length {ref} is below 2 samples")
    return ref


def resample_up(series: Sequence[float] | np.ndarray, length: int) -> np.ndarray:
    """Band-limited upsampling by zero-padding the spectrum.

    The spectrum of the input is extended symmetrically with zeros up to
    ``length`` bins; for an even input length the Nyquist bin is split evenly
    between the positive and negative halves so the output stays real.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2:
        raise InputError(f"resampling needs at least 2 samples, got {n}")
    if length <= n:
        raise ValueError(f"target length {length} must exceed input length {n}")
    spec = np.fft.fft(x)
    padded = np.zeros(length, dtype=complex)
    half = n // 2
    if n % 2:
        padded[: half + 1] = spec[: half + 1]
        padded[length - half :] = spec[n - half :]
    else:
        padded[:half] = spec[:half]
        padded[length - half + 1 :] = spec[half + 1 :]
        padded[half] = spec[half] / 2
        padded[length - half] = spec[half] / 2
    return np.fft.ifft(padded).real * (length / n)


def downsample_indices(n: int, length: int) -> np.ndarray:
    # round half up, in exact integer arithmetic
    k = np.arange(length, dtype=np.int64)
    return (2 * k * (n - 1) + (length - 1)) // (2 * (length - 1))


def downsample(series: Sequence[float] | np.ndarray, length: int) -> np.ndarray:
    """Equally spaced index extraction keeping the first and last samples."""
    x = np.asarray(series, dtype=float)
    if length < 2 or x.size <= length:
        raise ValueError(f"downsampling needs input length > target >= 2 (got {x.size} -> {length})")
    return x[downsample_indices(x.size, length)]


def fix_length(series: np.ndarray, length: int) -> np.ndarray:
    n = series.shape[-1]
    if n < length:
        return resample_up(series, length)
    if n > length:
        return downsample(series, length)
    return np.array(series, dtype=float)


def dataset_stats(resized: Sequence[np.ndarray]) -> Stats:
    """Per-variable mean and population std pooled over every standardized phase."""
    pooled = np.concatenate([r for r in resized], axis=1)
    return tuple((float(m), float(s)) for m, s in zip(pooled.mean(axis=1), pooled.std(axis=1)))


def _check_stats(stats: Stats) -> None:
    for var, (_, std) in zip(VARIABLE_KEYS, stats):
        if not std > 0:
            raise DegenerateDataError(f"variable {var!r} has zero dataset-level standard deviation; cannot z-normalize")


def standardize_phase(
    phase: ActionPhase,
    length: int,
    cfg: RdmConfig = RdmConfig(),
    stats: Stats | None = None,
) -> FixedPhase:
    """Bring one phase to ``length`` samples, then z-normalize with dataset-level ``stats``.

    ``stats`` is required when ``cfg.normalization == "zscore"``; compute it
    with :func:`dataset_stats` over the whole library (see
    :func:`standardize_library`).
    """
    resized = np.vstack([fix_length(phase.series[i], length) for i in range(N_VARIABLES)])
    if cfg.normalization == "none":
        return FixedPhase(phase.id, resized, None)
    if stats is None:
        raise ValueError("z-normalization needs dataset-level statistics")
    _check_stats(stats)
    mean = np.array([m for m, _ in stats])[:, None]
    std = np.array([s for _, s in stats])[:, None]
    return FixedPhase(phase.id, (resized - mean) / std, tuple(stats))


def standardize_library(lib: PhaseLibrary, cfg: RdmConfig = RdmConfig()) -> tuple[list[FixedPhase], int, Stats | None]:
    length = reference_length(lib, cfg)
    resized = [np.vstack([fix_length(p.series[i], length) for i in range(N_VARIABLES)]) for p in lib]
    if cfg.normalization == "none":
        return [FixedPhase(p.id, r, None) for p, r in zip(lib, resized)], length, None
    stats = dataset_stats(resized)
    _check_stats(stats)
    mean = np.array([m for m, _ in stats])[:, None]
    std = np.array([s for _, s in stats])[:, None]
    fixed = [FixedPhase(p.id, (r - mean) / std, stats) for p, r in zip(lib, resized)]
    return fixed, length, stats
