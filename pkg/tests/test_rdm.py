import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasepat.errors import ConfigError, DegenerateDataError
from phasepat.model import ActionPhase, PhaseLibrary
from phasepat.rdm import (
    RdmConfig,
    dataset_stats,
    downsample,
    downsample_indices,
    reference_length,
    resample_up,
    standardize_library,
    standardize_phase,
)


def test_reference_length_odd_count():
    assert reference_length([3, 5, 9]) == 5


@pytest.mark.parametrize("lengths", [[4, 8], [2, 2, 7, 9], [10, 3, 6, 6, 11, 4]])
def test_reference_length_lower_median_matches_sort_and_index(lengths):
    ordered = sorted(lengths)
    assert reference_length(lengths) == ordered[(len(ordered) - 1) // 2]


def test_reference_length_even_example():
    assert reference_length([4, 8]) == 4


def test_reference_length_fixed_policy(small_library):
    assert reference_length(small_library, RdmConfig(reference=20)) == 20


def test_fixed_reference_validated():
    with pytest.raises(ConfigError):
        RdmConfig(reference=1)
    with pytest.raises(ConfigError):
        RdmConfig(normalization="minmax")


def test_constant_series_upsamples_to_constant():
    out = resample_up([2.5, 2.5, 2.5], 5)
    assert out.shape == (5,)
    np.testing.assert_allclose(out, 2.5, atol=1e-9)


def test_pure_tone_upsampled_8_to_16():
    t8 = np.arange(8) / 8
    t16 = np.arange(16) / 16
    x = np.sin(2 * np.pi * 2 * t8) + 0.5 * np.cos(2 * np.pi * 1 * t8)
    expected = np.sin(2 * np.pi * 2 * t16) + 0.5 * np.cos(2 * np.pi * 1 * t16)
    np.testing.assert_allclose(resample_up(x, 16), expected, atol=1e-6)


def test_nyquist_tone_stays_real_and_split():
    # cos(pi n) on 4 points; its Nyquist energy splits into +/- halves
    x = np.array([1.0, -1.0, 1.0, -1.0])
    out = resample_up(x, 8)
    t = np.arange(8) / 8
    np.testing.assert_allclose(out, np.cos(2 * np.pi * 2 * t), atol=1e-12)


def test_downsample_exact_stride():
    np.testing.assert_array_equal(downsample(np.arange(9.0), 5), [0, 2, 4, 6, 8])


def test_downsample_rounding_example():
    # 9k/4 for k=0..4 is 0, 2.25, 4.5, 6.75, 9; half rounds up
    np.testing.assert_array_equal(downsample_indices(10, 5), [0, 2, 5, 7, 9])
    np.testing.assert_array_equal(downsample(np.arange(10.0) * 10, 5), [0, 20, 50, 70, 90])


def test_identity_pass_through_without_normalization():
    series = np.random.default_rng(1).normal(size=(4, 7))
    p = ActionPhase("x", series)
    fixed = standardize_phase(p, 7, RdmConfig(normalization="none"))
    assert np.array_equal(fixed.series, series)
    assert fixed.normalization is None


def test_constant_velocity_stays_constant_under_zscore():
    rng = np.random.default_rng(2)
    phases = []
    for i in range(3):
        s = rng.normal(size=(4, 6))
        s[0] = 10.0 + i
        phases.append(ActionPhase(f"p{i}", s))
    fixed, _, stats = standardize_library(PhaseLibrary(tuple(phases)))
    assert stats[0][1] > 0
    for f in fixed:
        assert np.ptp(f.series[0]) < 1e-12


def test_mixed_library_reaches_reference_length(small_library):
    fixed, length, _ = standardize_library(small_library)
    assert length == 5
    assert all(f.series.shape == (4, 5) for f in fixed)


def test_zero_std_names_the_variable():
    phases = [ActionPhase(f"p{i}", np.vstack([np.arange(5.0) + i, np.zeros(5), np.ones(5) * 3, np.arange(5.0)])) for i in range(3)]
    with pytest.raises(DegenerateDataError, match="'a'"):
        standardize_library(PhaseLibrary(tuple(phases)))


def test_zscore_stats_are_pooled_over_the_dataset():
    rng = np.random.default_rng(3)
    lib = PhaseLibrary(tuple(ActionPhase(f"p{i}", rng.normal(size=(4, n)) * 3 + 7) for i, n in enumerate((4, 6, 6, 9))))
    fixed, _, _ = standardize_library(lib)
    pooled = np.concatenate([f.series for f in fixed], axis=1)
    np.testing.assert_allclose(pooled.mean(axis=1), 0, atol=1e-12)
    np.testing.assert_allclose(pooled.std(axis=1), 1, atol=1e-12)


def test_stats_helper_matches_numpy():
    arrays = [np.arange(8.0).reshape(4, 2), np.ones((4, 2))]
    stats = dataset_stats(arrays)
    pooled = np.concatenate(arrays, axis=1)
    assert stats[2] == (pooled[2].mean(), pooled[2].std())


# --- properties

@given(n=st.integers(2, 40), extra=st.integers(1, 40), seed=st.integers(0, 2**16))
def test_upsampling_preserves_mean_and_length(n, extra, seed):
    x = np.random.default_rng(seed).normal(size=n) * 5
    out = resample_up(x, n + extra)
    assert out.shape == (n + extra,)
    assert abs(out.mean() - x.mean()) < 1e-9


@given(n=st.integers(3, 60), seed=st.integers(0, 2**16), data=st.data())
def test_downsample_keeps_endpoints_subset_and_monotonicity(n, seed, data):
    length = data.draw(st.integers(2, n - 1))
    x = np.cumsum(np.abs(np.random.default_rng(seed).normal(size=n)))
    out = downsample(x, length)
    assert out.shape == (length,)
    assert out[0] == x[0] and out[-1] == x[-1]
    assert set(out.tolist()) <= set(x.tolist())
    assert np.all(np.diff(out) >= 0)
    idx = downsample_indices(n, length)
    assert np.all(np.diff(idx) > 0)


@given(st.lists(st.integers(2, 30), min_size=1, max_size=12), st.integers(0, 2**16))
def test_every_fixed_phase_has_reference_length(lengths, seed):
    rng = np.random.default_rng(seed)
    lib = PhaseLibrary(tuple(ActionPhase(f"p{i}", rng.normal(size=(4, n))) for i, n in enumerate(lengths)))
    fixed, length, _ = standardize_library(lib, RdmConfig(normalization="none"))
    assert all(f.series.shape == (4, length) for f in fixed)
