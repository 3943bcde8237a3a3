import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasepat.model import (
    ActionPhase,
    PhaseLibrary,
    TrendLabel,
    VariableId,
    validate_library,
)


def phase(pid, n=4, fill=1.0, **kw):
    return ActionPhase(pid, np.full((4, n), fill), **kw)


def test_duplicate_ids_are_flagged():
    report = validate_library(PhaseLibrary((phase("p1"), phase("p1"))))
    assert not report.ok
    assert any(v.phase_id == "p1" and "duplicate" in v.reason for v in report.violations)


def test_length_mismatch_is_flagged():
    ragged = ActionPhase.from_ragged("p1", [[1.0] * 5, [0.0] * 5, [2.0] * 4, [0.0] * 5])
    report = validate_library(PhaseLibrary((ragged,)))
    assert not report.ok
    assert "length mismatch" in str(report)
    assert "d=4" in str(report)


def test_well_formed_library_has_empty_report():
    report = validate_library(PhaseLibrary((phase("a"), phase("b"), phase("c"))))
    assert report.ok
    assert report.violations == ()


def test_variable_order_and_keys():
    assert [v.key for v in VariableId] == ["v", "a", "d", "dv"]
    assert VariableId.from_key("dv") is VariableId.DV
    with pytest.raises(KeyError):
        VariableId.from_key("speed")


def test_phase_series_is_read_only():
    p = phase("x")
    with pytest.raises(ValueError):
        p.series[0, 0] = 5.0


def test_labels_are_coerced_and_checked():
    p = phase("x", labels=("I", "D", "H", "L"))
    assert p.labels == (TrendLabel.I, TrendLabel.D, TrendLabel.H, TrendLabel.L)
    with pytest.raises(ValueError):
        phase("y", labels=("I", "D"))


def test_library_helpers():
    lib = PhaseLibrary((phase("a", 3), phase("b", 7)), "tag")
    assert lib.ids == ["a", "b"]
    assert lib.lengths() == [3, 7]
    assert lib.subset(["b"]).ids == ["b"]
    assert len(lib) == 2


# --- random violations are always detected

VIOLATIONS = ("short", "nan", "inf", "period", "duplicate", "ragged", "empty_id")


@given(
    n_good=st.integers(1, 5),
    kinds=st.lists(st.sampled_from(VIOLATIONS), min_size=1, max_size=4),
    seed=st.integers(0, 2**16),
)
def test_random_violations_are_detected(n_good, kinds, seed):
    rng = np.random.default_rng(seed)
    phases = [ActionPhase(f"ok{i}", rng.normal(size=(4, int(rng.integers(2, 12))))) for i in range(n_good)]
    expected = set()
    for k, kind in enumerate(kinds):
        pid = f"bad{k}"
        series = rng.normal(size=(4, 6))
        if kind == "short":
            phases.append(ActionPhase(pid, rng.normal(size=(4, 1))))
        elif kind == "nan":
            series[int(rng.integers(4)), int(rng.integers(6))] = math.nan
            phases.append(ActionPhase(pid, series))
        elif kind == "inf":
            series[int(rng.integers(4)), int(rng.integers(6))] = -math.inf
            phases.append(ActionPhase(pid, series))
        elif kind == "period":
            phases.append(ActionPhase(pid, series, sample_period=float(rng.choice([0.0, -0.1, math.nan]))))
        elif kind == "duplicate":
            pid = phases[0].id
            phases.append(ActionPhase(pid, series))
        elif kind == "ragged":
            chans = [list(series[i]) for i in range(4)]
            chans[int(rng.integers(4))].pop()
            phases.append(ActionPhase.from_ragged(pid, chans))
        elif kind == "empty_id":
            pid = ""
            phases.append(ActionPhase(pid, series))
        expected.add(pid if kind != "empty_id" else repr(""))
    report = validate_library(PhaseLibrary(tuple(phases)))
    flagged = {v.phase_id for v in report.violations}
    assert not report.ok
    assert expected <= flagged


@given(st.integers(2, 30), st.integers(0, 2**16))
def test_valid_random_phases_pass(n, seed):
    rng = np.random.default_rng(seed)
    lib = PhaseLibrary((ActionPhase("p", rng.normal(size=(4, n)), sample_period=0.05),))
    assert validate_library(lib).ok


def test_empty_library_is_invalid():
    assert not validate_library(PhaseLibrary(())).ok
