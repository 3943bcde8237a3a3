"""Calibration configuration and its TOML loader."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

from .cluster import CutPolicy
from .errors import ConfigError
from .interpret import InterpretConfig
from .rdm import RdmConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class CalibrationConfig:
    delta: float = 1.0
    epsilon_percentile: float = 99.0
    cut: CutPolicy = field(default_factory=CutPolicy)
    round_cuts: tuple[CutPolicy, ...] = ()
    fastdtw_radius: int = 1
    max_rounds: int = 10
    min_pool: int = 4
    pair_budget: int | None = 2_000_000
    seed: int = 0
    dsi_mode: Literal["pairwise", "medoid"] = "pairwise"
    epsilon_pool: Literal["phases", "pairs"] = "phases"
    pc1_floor: float = 0.5
    rdm: RdmConfig = field(default_factory=RdmConfig)
    interpret: InterpretConfig = field(default_factory=InterpretConfig)

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ConfigError("delta must be > 0")
        if not 0 < self.epsilon_percentile <= 100:
            raise ConfigError("epsilon_percentile must lie in (0, 100]")
        if self.fastdtw_radius < 0:
            raise ConfigError("fastdtw_radius must be >= 0")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        if self.min_pool < 4:
            raise ConfigError("min_pool must be >= 4")
        if self.pair_budget is not None and self.pair_budget < 1:
            raise ConfigError("pair_budget must be positive")
        if self.dsi_mode not in ("pairwise", "medoid"):
            raise ConfigError(f"unknown dsi_mode {self.dsi_mode!r}")
        if self.epsilon_pool not in ("pairs", "phases"):
            raise ConfigError(f"unknown epsilon_pool {self.epsilon_pool!r}")

    def cut_for(self, round_index: int) -> CutPolicy:
        """Cut policy of a 1-based round; later rounds reuse the default policy."""
        if 1 <= round_index <= len(self.round_cuts):
            return self.round_cuts[round_index - 1]
        return self.cut

    def replace(self, **changes: Any) -> "CalibrationConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build(cls, raw: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def config_from_dict(raw: dict) -> CalibrationConfig:
    raw = dict(raw)
    known = {"calibration", "cut", "rdm", "interpret"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    top = dict(raw.get("calibration", {}))
    cut_raw = dict(raw.get("cut", {}))
    rounds = [_build(CutPolicy, dict(r), "cut.rounds") for r in cut_raw.pop("rounds", [])]
    top["cut"] = _build(CutPolicy, cut_raw, "cut")
    top["round_cuts"] = tuple(rounds)
    top["rdm"] = _build(RdmConfig, dict(raw.get("rdm", {})), "rdm")
    top["interpret"] = _build(InterpretConfig, dict(raw.get("interpret", {})), "interpret")
    return _build(CalibrationConfig, top, "calibration")


def load_config(path: str | Path) -> CalibrationConfig:
    """Read a TOML file with optional ``[calibration]``, ``[cut]``, ``[rdm]`` and ``[interpret]`` sections."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw)
