"""Synthetic phase libraries with planted driving patterns."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .interpret import Motion, State
from .model import DEFAULT_SAMPLE_PERIOD, ActionPhase, PhaseLibrary

DRIFT_SIGN = {Motion.CATCH_UP: 1.0, Motion.KEEP_AWAY: -1.0, Motion.MAINTAIN_DISTANCE: 0.0}
MIN_GAP = 5.0
UNSTABLE_SPREAD = 0.1


@dataclass(frozen=True)
class GeneratorSpec:
    """One planted pattern.

    ``noise`` scales the state's default noise; ``0`` gives noiseless phases.
    Unstable phases get heavy-tailed speed noise and a spread of drift strength.
    """

    motion: Motion
    state: State = State.STABLE
    count: int = 100
    length_min: int = 30
    length_max: int = 50
    seed: int = 0
    noise: float = 1.0
    sample_period: float = DEFAULT_SAMPLE_PERIOD

    def __post_init__(self) -> None:
        object.__setattr__(self, "motion", Motion(self.motion))
        object.__setattr__(self, "state", State(self.state))
        if self.length_min < 2 or self.length_max < self.length_min:
            raise ConfigError(f"invalid length range [{self.length_min}, {self.length_max}]")
        if self.count < 1:
            raise ConfigError("count must be >= 1")
        if self.noise < 0 or self.sample_period <= 0:
            raise ConfigError("noise must be >= 0 and sample_period > 0")

    @classmethod
    def from_dict(cls, raw: dict) -> "GeneratorSpec":
        raw = dict(raw)
        if "length" in raw:
            raw["length_min"], raw["length_max"] = raw.pop("length")
        try:
            return cls(**raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad generator spec {raw}: {exc}") from exc


def _acceleration_profile(spec: GeneratorSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    sign = DRIFT_SIGN[spec.motion]
    # total speed change per phase, independent of its duration
    change = rng.uniform(2.5, 3.5)
    if spec.state is State.UNSTABLE:
        # heavy-tailed, bounded spread of drift strength across phases
        change *= float(np.exp(UNSTABLE_SPREAD * np.clip(rng.standard_t(3), -3.0, 3.0)))
    return np.full(n, sign * change / (max(n - 1, 1) * spec.sample_period))


def _noise(spec: GeneratorSpec, n: int, rng: np.random.Generator, sigma: float, heavy: bool) -> np.ndarray:
    scale = sigma * spec.noise
    if scale == 0.0:
        return np.zeros(n)
    if heavy:
        return scale * rng.standard_t(3, size=n)
    return scale * rng.standard_normal(n)


def _phase(spec: GeneratorSpec, pid: str, rng: np.random.Generator) -> ActionPhase:
    n = int(rng.integers(spec.length_min, spec.length_max + 1))
    dt = spec.sample_period
    sign = DRIFT_SIGN[spec.motion]
    lead = rng.uniform(12.0, 22.0)
    # catching up starts faster than the leader, keeping away starts slower
    v0 = lead + sign * rng.uniform(0.0, 1.0)
    acc = _acceleration_profile(spec, n, rng)
    v = v0 + np.concatenate([[0.0], np.cumsum(acc[:-1]) * dt])
    v = v + _noise(spec, n, rng, 0.05, spec.state is State.UNSTABLE)
    a = acc + _noise(spec, n, rng, 0.05, False)
    dv = lead - v
    travel = np.concatenate([[0.0], np.cumsum(dv[:-1]) * dt])
    d0 = rng.uniform(10.0, 30.0) + max(0.0, MIN_GAP - travel.min())
    d = d0 + travel
    return ActionPhase(pid, np.vstack([v, a, d, dv]), sample_period=dt)


def generate(specs: Sequence[GeneratorSpec], source_tag: str = "synthetic") -> tuple[PhaseLibrary, dict[str, GeneratorSpec]]:
    """Phases from every spec (each spec draws from its own seeded stream) and the truth map."""
    phases: list[ActionPhase] = []
    truth: dict[str, GeneratorSpec] = {}
    for k, spec in enumerate(specs):
        rng = np.random.default_rng(spec.seed)
        for i in range(spec.count):
            pid = f"g{k}-{i:04d}"
            phases.append(_phase(spec, pid, rng))
            truth[pid] = spec
    return PhaseLibrary(tuple(phases), source_tag), truth


def default_specs(
    motions: Iterable[Motion] = tuple(Motion),
    states: Iterable[State] = (State.STABLE,),
    count: int = 100,
    seed: int = 0,
    **kwargs,
) -> list[GeneratorSpec]:
    specs = []
    for state in states:
        for motion in motions:
            specs.append(GeneratorSpec(motion, state, count, seed=seed + len(specs), **kwargs))
    return specs


def inject_outliers(
    lib: PhaseLibrary,
    count: int = 5,
    template: str | None = None,
    scale: float = 3.0,
    jitter: float = 1e-3,
    seed: int = 0,
) -> tuple[PhaseLibrary, list[str]]:
    """Append near-copies of one phase shifted far up or down in every variable.

    Offsets alternate in sign and are ``scale`` times each variable's range over
    the library, so every injected phase is far (in warping distance) from the
    clean phases and from the injected phases of opposite sign.  Per-phase
    centering in feature extraction removes the offsets, so the copies keep the
    template's features up to ``jitter``.
    """
    if count < 2:
        raise ConfigError("inject at least 2 outliers so each has an opposite-sign partner")
    phases = lib.by_id()
    base = phases[template] if template is not None else lib.phases[0]
    stacked = np.concatenate([p.series for p in lib.phases], axis=1)
    span = stacked.max(axis=1) - stacked.min(axis=1)
    rng = np.random.default_rng(seed)
    added, ids = [], []
    for i in range(count):
        pid = f"outlier-{i:02d}"
        if pid in phases:
            raise ConfigError(f"library already holds a phase named {pid}")
        sign = 1.0 if i % 2 == 0 else -1.0
        shift = sign * scale * span[:, None]
        series = base.series + shift + jitter * rng.standard_normal(base.series.shape)
        added.append(ActionPhase(pid, series, sample_period=base.sample_period))
        ids.append(pid)
    return PhaseLibrary(lib.phases + tuple(added), lib.source_tag), ids
