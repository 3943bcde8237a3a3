import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from phasepat.model import ActionPhase, FixedPhase, PhaseLibrary

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def make_phase(pid, v, a=None, d=None, dv=None, sample_period=0.1):
    v = np.asarray(v, dtype=float)
    a = np.zeros_like(v) if a is None else a
    d = np.full_like(v, 20.0) if d is None else d
    dv = np.zeros_like(v) if dv is None else dv
    return ActionPhase(pid, [v, a, d, dv], sample_period=sample_period)


def make_fixed(pid, series):
    return FixedPhase(pid, np.asarray(series, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_library(rng):
    phases = []
    for i, n in enumerate((3, 5, 9)):
        phases.append(ActionPhase(f"p{i}", rng.normal(size=(4, n))))
    return PhaseLibrary(tuple(phases), "small")
