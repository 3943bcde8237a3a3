"""Iterative driving-pattern discovery from car-following Action phases."""

import os

import numba

# the bundled TBB is often too old; workqueue needs no external runtime
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

from .calibrate import Pattern, RoundRecord, RunReport, calibrate, run_round  # noqa: E402
from .config import CalibrationConfig, load_config  # noqa: E402
from .errors import (  # noqa: E402
    ConfigError,
    DegenerateDataError,
    InputError,
    NonConvergenceError,
    PhasePatError,
)
from .model import ActionPhase, FixedPhase, PhaseLibrary, VariableId  # noqa: E402

__all__ = [
    "ActionPhase",
    "CalibrationConfig",
    "ConfigError",
    "DegenerateDataError",
    "FixedPhase",
    "InputError",
    "NonConvergenceError",
    "Pattern",
    "PhaseLibrary",
    "PhasePatError",
    "RoundRecord",
    "RunReport",
    "VariableId",
    "calibrate",
    "load_config",
    "run_round",
]
