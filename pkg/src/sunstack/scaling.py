"""Per-feature scaling with the two schemes the base models are trained under."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import SchemaError, as_float_array

SCHEMES = ("minmax", "zscore")

# Columns whose spread is below this are treated as constant and mapped to 0,
# so a dead sensor cannot blow up a z-score.
DEGENERATE_SPREAD = 1e-12


class FeatureScaler(BaseEstimator, TransformerMixin):
    """Column-wise min-max ([0, 1]) or z-score scaling.

    ``minmax`` does not clip unseen data, so transformed values may leave
    [0, 1]; ``zscore`` uses the population standard deviation.  Constant
    columns are remembered and always transform to 0.
    """

    def __init__(self, scheme: str = "minmax"):
        self.scheme = scheme

    def fit(self, X, y=None):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        X = as_float_array(X, "X", ndim=2)
        if X.shape[0] < 1:
            raise SchemaError("cannot fit scaler on an empty matrix")
        self.n_features_in_ = X.shape[1]
        if self.scheme == "minmax":
            self.center_ = X.min(axis=0)
            spread = X.max(axis=0) - self.center_
        else:
            self.center_ = X.mean(axis=0)
            spread = X.std(axis=0)
        self.degenerate_ = spread <= DEGENERATE_SPREAD
        self.scale_ = np.where(self.degenerate_, 1.0, spread)
        return self

    def transform(self, X) -> np.ndarray:
        X = as_float_array(X, "X", ndim=2)
        self._check_fitted(X)
        out = (X - self.center_) / self.scale_
        out[:, self.degenerate_] = 0.0
        return out

    def inverse_transform(self, X) -> np.ndarray:
        X = as_float_array(X, "X", ndim=2)
        self._check_fitted(X)
        out = X * self.scale_ + self.center_
        # Constant columns collapse to their fitted center on the way back.
        out[:, self.degenerate_] = self.center_[self.degenerate_]
        return out

    def _check_fitted(self, X: np.ndarray) -> None:
        if not hasattr(self, "scale_"):
            raise RuntimeError("FeatureScaler is not fitted")
        if X.shape[1] != self.n_features_in_:
            raise SchemaError(
                f"expected {self.n_features_in_} columns, got {X.shape[1]}"
            )
