"""Design-matrix assembly for base models and the combiner."""

import numpy as np
import pytest

from sunstack import build_combiner_matrix, build_feature_matrix
from sunstack.features import EXTENDED_COLUMNS
from sunstack.validation import (
    AlignmentError,
    ConfigurationError,
    IntegrityError,
)


def test_original14_shape_and_alignment(ds_two_weeks):
    fm = build_feature_matrix(ds_two_weeks, "original14", daylight_only=True)
    n = ds_two_weeks.daylight_mask().sum()
    assert fm.values.shape == (n, 14)
    assert fm.columns == tuple(f"var{i}" for i in range(1, 15))
    assert fm.target.shape == (n,)
    assert len(fm.timestamps) == n


def test_extended_appends_four_calendar_columns(ds_two_weeks):
    fm = build_feature_matrix(ds_two_weeks, "extended")
    assert fm.values.shape[1] == 18
    assert fm.columns[14:] == EXTENDED_COLUMNS
    # sine/cosine pairs stay on the unit circle
    hour_pair = fm.values[:, 14] ** 2 + fm.values[:, 15] ** 2
    doy_pair = fm.values[:, 16] ** 2 + fm.values[:, 17] ** 2
    assert np.allclose(hour_pair, 1.0) and np.allclose(doy_pair, 1.0)


def test_calendar_features_follow_local_clock(ds_two_weeks):
    ds = ds_two_weeks
    fm = build_feature_matrix(ds, "extended")
    local = ds.local_timestamps()
    hour = (local - local.astype("datetime64[D]")).astype(
        "timedelta64[s]"
    ).astype(float) / 3600.0
    assert np.allclose(fm.values[:, 14], np.sin(2 * np.pi * hour / 24.0), atol=1e-12)


def test_same_inputs_build_identical_matrices(ds_two_weeks):
    a = build_feature_matrix(ds_two_weeks, "extended", daylight_only=True)
    b = build_feature_matrix(ds_two_weeks, "extended", daylight_only=True)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.target, b.target)


def test_missing_power_is_named_in_the_error(ds_two_weeks):
    ds = ds_two_weeks.slice(slice(0, 48))
    mask = ds.daylight_mask()
    first_day_idx = int(np.flatnonzero(mask)[3])
    ds.power_w[first_day_idx] = np.nan
    with pytest.raises(IntegrityError) as err:
        build_feature_matrix(ds, "original14", daylight_only=True)
    assert str(ds.timestamps[first_day_idx]) in str(err.value)


def test_unknown_input_set_rejected(ds_two_weeks):
    with pytest.raises(ConfigurationError, match="input_set"):
        build_feature_matrix(ds_two_weeks, "orig")


def _forecasts_for(ds, k=3, seed=0):
    gen = np.random.default_rng(seed)
    return np.clip(gen.uniform(0, 1, (len(ds), k)), 0, 1)


def test_combiner_matrix_column_arithmetic(ds_two_weeks):
    ds = ds_two_weeks
    ids = ("m1", "m2", "m3")
    values = _forecasts_for(ds)
    lag0 = build_combiner_matrix(ds, ds.timestamps, values, ids, lags=(0,))
    assert len(lag0.columns) == 14 + 3
    assert lag0.values.shape[0] == len(ds)

    lagged = build_combiner_matrix(ds, ds.timestamps, values, ids, lags=(0, 24))
    assert len(lagged.columns) == 14 + 6
    # the first 24 hourly rows have no yesterday to look back to
    assert lagged.values.shape[0] == len(ds) - 24
    assert lagged.timestamps[0] == ds.timestamps[24]


def test_combiner_lag_columns_hold_shifted_values(ds_two_weeks):
    ds = ds_two_weeks
    ids = ("m1", "m2")
    values = _forecasts_for(ds, k=2)
    fm = build_combiner_matrix(ds, ds.timestamps, values, ids, lags=(0, 24))
    j0 = fm.columns.index("m1_lag0")
    j24 = fm.columns.index("m1_lag24")
    assert np.array_equal(fm.values[:, j0], values[24:, 0])
    assert np.array_equal(fm.values[:, j24], values[:-24, 0])


def test_combiner_requires_lag_zero(ds_two_weeks):
    ds = ds_two_weeks
    with pytest.raises(ConfigurationError, match="lag 0"):
        build_combiner_matrix(
            ds, ds.timestamps, _forecasts_for(ds), ("a", "b", "c"), lags=(24,)
        )


def test_combiner_rejects_misaligned_forecasts(ds_two_weeks):
    ds = ds_two_weeks
    values = _forecasts_for(ds)
    shifted = ds.timestamps + np.timedelta64(3600, "s")
    with pytest.raises(AlignmentError) as err:
        build_combiner_matrix(ds, shifted, values, ("a", "b", "c"))
    assert str(ds.timestamps[0]) in str(err.value)
    with pytest.raises(AlignmentError, match="cover"):
        build_combiner_matrix(
            ds, ds.timestamps[:-1], values[:-1], ("a", "b", "c")
        )


def test_combiner_target_is_normalized_power(ds_two_weeks):
    ds = ds_two_weeks
    fm = build_combiner_matrix(
        ds, ds.timestamps, _forecasts_for(ds), ("a", "b", "c"), lags=(0,)
    )
    expected = ds.power_w / ds.site.nominal_power_w
    assert np.allclose(fm.target, expected, equal_nan=True)
