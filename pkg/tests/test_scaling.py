"""Scaler behavior under both schemes, including the degenerate-column rule."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sunstack import FeatureScaler
from sunstack.scaling import SCHEMES
from sunstack.validation import SchemaError


def test_minmax_maps_training_data_into_unit_box():
    gen = np.random.default_rng(0)
    X = gen.normal(3.0, 10.0, (50, 4))
    Z = FeatureScaler("minmax").fit(X).transform(X)
    assert Z.min() == 0.0 and Z.max() == 1.0


def test_minmax_does_not_clip_unseen_data():
    X = np.array([[0.0], [10.0]])
    scaler = FeatureScaler("minmax").fit(X)
    assert scaler.transform(np.array([[20.0]]))[0, 0] == 2.0
    assert scaler.transform(np.array([[-5.0]]))[0, 0] == -0.5


def test_zscore_uses_population_std():
    X = np.array([[1.0], [3.0]])
    scaler = FeatureScaler("zscore").fit(X)
    # population std of {1, 3} is 1, sample std would be sqrt(2)
    assert scaler.scale_[0] == pytest.approx(1.0)
    Z = scaler.transform(X)
    assert Z[:, 0] == pytest.approx([-1.0, 1.0])


def test_value_at_column_mean_maps_to_zero():
    gen = np.random.default_rng(2)
    X = gen.uniform(-4, 9, (30, 3))
    scaler = FeatureScaler("zscore").fit(X)
    Z = scaler.transform(X.mean(axis=0, keepdims=True))
    assert np.allclose(Z, 0.0, atol=1e-12)


def test_constant_column_is_flagged_and_scaled_to_zero():
    X = np.column_stack([np.full(10, 5.0), np.arange(10.0)])
    for scheme in SCHEMES:
        scaler = FeatureScaler(scheme).fit(X)
        assert scaler.degenerate_.tolist() == [True, False]
        Z = scaler.transform(X + 1.0)  # even shifted data maps to 0 there
        assert (Z[:, 0] == 0.0).all()


@settings(max_examples=60, deadline=None)
@given(
    hnp.arrays(
        np.float64,
        st.tuples(st.integers(2, 12), st.integers(1, 5)),
        elements=st.floats(-1e6, 1e6, allow_nan=False),
    ),
    st.sampled_from(SCHEMES),
)
def test_round_trip_identity_on_spread_columns(X, scheme):
    scaler = FeatureScaler(scheme).fit(X)
    back = scaler.inverse_transform(scaler.transform(X))
    live = ~scaler.degenerate_
    scale = np.maximum(1.0, np.abs(X[:, live]))
    assert np.all(np.abs(back[:, live] - X[:, live]) <= 1e-9 * scale)


def test_unfitted_and_mismatched_calls_fail():
    scaler = FeatureScaler("minmax")
    with pytest.raises(RuntimeError, match="not fitted"):
        scaler.transform(np.zeros((2, 2)))
    scaler.fit(np.zeros((3, 2)) + np.arange(2))
    with pytest.raises(SchemaError, match="columns"):
        scaler.transform(np.zeros((2, 3)))


def test_rejects_unknown_scheme_and_empty_matrix():
    with pytest.raises(ValueError, match="scheme"):
        FeatureScaler("robust").fit(np.zeros((2, 2)))
    with pytest.raises(SchemaError, match="empty"):
        FeatureScaler("minmax").fit(np.zeros((0, 2)))


def test_get_params_round_trip():
    scaler = FeatureScaler("zscore")
    assert FeatureScaler(**scaler.get_params()).scheme == "zscore"
