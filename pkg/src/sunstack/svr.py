"""Epsilon-insensitive support vector regression with an RBF kernel.

The dual problem is solved by sequential minimal optimization over the net
coefficients b_i = alpha_i - alpha*_i in [-C, C] with sum(b) = 0.  Each step
pairs the worst violator with the partner giving the largest second-order
objective decrease, takes the analytic step for that pair, and clips it to
the box.  Selection is deterministic (first index wins ties), so training is
reproducible without any seeding.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin

from .validation import ConvergenceError, SchemaError, as_float_array, check_lengths_match

# Curvature floor for a pair step; keeps the analytic step finite when two
# support candidates coincide in feature space.
_CURVATURE_FLOOR = 1e-12


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    """Gaussian kernel exp(-gamma * ||a - b||^2) between two row sets.

    When ``A is B`` the diagonal is pinned to exactly 1 so Gram matrices do
    not pick up rounding noise from the squared-distance expansion.
    """
    A = as_float_array(A, "A", ndim=2)
    same = B is A
    B2 = A if same else as_float_array(B, "B", ndim=2)
    if A.shape[1] != B2.shape[1]:
        raise SchemaError(f"kernel operands differ in width: {A.shape[1]} vs {B2.shape[1]}")
    aa = np.einsum("ij,ij->i", A, A)
    bb = aa if same else np.einsum("ij,ij->i", B2, B2)
    d2 = aa[:, None] + bb[None, :] - 2.0 * (A @ B2.T)
    np.maximum(d2, 0.0, out=d2)
    K = np.exp(-gamma * d2)
    if same:
        np.fill_diagonal(K, 1.0)
    return K


@njit(cache=True, nogil=True)
def _smo_solve(K, y, C, eps, tol, max_iter):
    n = K.shape[0]
    beta = np.zeros(n)
    r = y.copy()  # r[i] = y[i] - sum_j beta[j] * K[i, j]
    it = 0
    while it < max_iter:
        max_up = -np.inf
        i = -1
        for t in range(n):
            if beta[t] < C:
                s = r[t] + eps if beta[t] < 0.0 else r[t] - eps
                if s > max_up:
                    max_up = s
                    i = t
        Ki = K[i]
        kii = Ki[i]
        min_low = np.inf
        best_gain = -1.0
        j = -1
        kappa_j = 1.0
        for t in range(n):
            bt = beta[t]
            if bt > -C:
                s = r[t] - eps if bt > 0.0 else r[t] + eps
                if s < min_low:
                    min_low = s
                diff = max_up - s
                if diff > 0.0:
                    kappa = kii + K[t, t] - 2.0 * Ki[t]
                    if kappa < _CURVATURE_FLOOR:
                        kappa = _CURVATURE_FLOOR
                    gain = diff * diff / kappa
                    if gain > best_gain:
                        best_gain = gain
                        j = t
                        kappa_j = kappa
        if max_up - min_low <= tol:
            break
        score_j = r[j] - eps if beta[j] > 0.0 else r[j] + eps
        step = (max_up - score_j) / kappa_j
        # The moving coefficient on each side stops at the nearest box edge;
        # crossing zero flips which of alpha/alpha* is active, so the step
        # also stops there and a later pass may continue on the other side.
        lim_i = -beta[i] if beta[i] < 0.0 else C - beta[i]
        lim_j = beta[j] if beta[j] > 0.0 else C + beta[j]
        if step > lim_i:
            step = lim_i
        if step > lim_j:
            step = lim_j
        beta[i] += step
        beta[j] -= step
        Kj = K[j]
        for t in range(n):
            r[t] -= step * (Ki[t] - Kj[t])
        it += 1
    max_up = -np.inf
    min_low = np.inf
    for t in range(n):
        bt = beta[t]
        rt = r[t]
        if bt < C:
            s = rt + eps if bt < 0.0 else rt - eps
            if s > max_up:
                max_up = s
        if bt > -C:
            s = rt - eps if bt > 0.0 else rt + eps
            if s < min_low:
                min_low = s
    bias = 0.5 * (max_up + min_low)
    violation = max_up - min_low
    return beta, bias, it, violation


class SupportVectorRegressor(BaseEstimator, RegressorMixin):
    """RBF-kernel epsilon-SVR for normalized PV power.

    Expects already-scaled features and targets in [0, 1]; ``predict`` clips
    to that range while ``decision_function`` returns the raw kernel
    expansion.  ``max_iter`` caps pair updates and defaults to 10x the number
    of training rows; hitting the cap raises a convergence error rather than
    returning a half-solved model.
    """

    def __init__(
        self,
        C: float = 10.0,
        gamma: float = 8.0,
        epsilon: float = 0.01,
        tol: float = 1e-3,
        max_iter: int | None = None,
    ):
        self.C = C
        self.gamma = gamma
        self.epsilon = epsilon
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X = as_float_array(X, "X", ndim=2)
        y = as_float_array(y, "y", ndim=1)
        check_lengths_match(X=X, y=y)
        if len(y) == 0:
            raise SchemaError("cannot fit on an empty training set")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        n = len(y)
        cap = 10 * n if self.max_iter is None else int(self.max_iter)
        if cap <= 0:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")

        K = rbf_kernel(X, X, self.gamma)
        beta, bias, n_iter, violation = _smo_solve(
            K, y, float(self.C), float(self.epsilon), float(self.tol), cap
        )
        if violation > self.tol:
            raise ConvergenceError(
                f"SMO hit the {cap}-update cap before reaching tol={self.tol}", violation
            )
        sv = beta != 0.0
        self.n_features_in_ = X.shape[1]
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = X[sv].copy()
        self.dual_coef_ = beta[sv].copy()
        self.intercept_ = float(bias)
        self.n_iter_ = int(n_iter)
        u = K @ beta
        self.dual_objective_ = float(
            0.5 * beta @ u + self.epsilon * np.abs(beta).sum() - y @ beta
        )
        return self

    def decision_function(self, X) -> np.ndarray:
        X = as_float_array(X, "X", ndim=2)
        if not hasattr(self, "intercept_"):
            raise RuntimeError("model is not fitted")
        if X.shape[1] != self.n_features_in_:
            raise SchemaError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        if len(self.dual_coef_) == 0:
            return np.full(X.shape[0], self.intercept_)
        K = rbf_kernel(X, self.support_vectors_, self.gamma)
        return K @ self.dual_coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        return np.clip(self.decision_function(X), 0.0, 1.0)


def kkt_violation(model: SupportVectorRegressor, X, y) -> float:
    """Largest complementarity violation of the fitted model on its own
    training set.

    Each training point must sit on the side of the epsilon tube its dual
    coefficient implies: interior coefficients pin the residual to a tube
    edge, bounded ones may push past it, and zero coefficients must stay
    inside.  A freshly converged model scores at most ``tol``.
    """
    X = as_float_array(X, "X", ndim=2)
    y = as_float_array(y, "y", ndim=1)
    check_lengths_match(X=X, y=y)
    n = len(y)
    if len(model.support_) and model.support_.max() >= n:
        raise SchemaError("features are not the training set of this model")
    beta = np.zeros(n)
    beta[model.support_] = model.dual_coef_
    E = model.decision_function(X) - y
    C = float(model.C)
    eps = float(model.epsilon)
    edge = 1e-9 * C  # classification slack for "at the bound"

    viol = np.zeros(n)
    at_upper = beta >= C - edge
    at_lower = beta <= -C + edge
    pos = (beta > edge) & ~at_upper
    neg = (beta < -edge) & ~at_lower
    zero = np.abs(beta) <= edge
    viol[at_upper] = np.maximum(0.0, E[at_upper] + eps)
    viol[at_lower] = np.maximum(0.0, eps - E[at_lower])
    viol[pos] = np.abs(E[pos] + eps)
    viol[neg] = np.abs(E[neg] - eps)
    viol[zero] = np.maximum(0.0, np.abs(E[zero]) - eps)
    return float(viol.max(initial=0.0))
