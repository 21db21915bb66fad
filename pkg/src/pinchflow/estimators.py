"""scikit-learn transformers over second fundamental form samples.

These let the invariants and the pinching gap slot into ordinary
``Pipeline`` objects, e.g. to feed sampled tensors into a classifier that
separates pinched from unpinched data.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .profile import PinchingProfile
from .sff import batch_invariants

INVARIANT_COLUMNS = ("a2", "h2", "hring2", "p2", "aa", "rperp2", "s2_minus", "comm_minus", "comm_h", "ip_h")


class InvariantFeatures(TransformerMixin, BaseEstimator):
    """Flattened blocks (m*n*n columns, alpha-major) -> frame-invariant scalars.

    ``columns`` selects which invariants to emit, in order.
    """

    def __init__(self, n: int = 8, m: int = 2, columns=INVARIANT_COLUMNS, allow_degenerate: bool = True):
        self.n = n
        self.m = m
        self.columns = columns
        self.allow_degenerate = allow_degenerate

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != self.m * self.n * self.n:
            raise ValueError(f"expected {self.m * self.n * self.n} columns, got {X.shape[1]}")
        unknown = [c for c in self.columns if c not in INVARIANT_COLUMNS]
        if unknown:
            raise ValueError(f"unknown invariant columns {unknown}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        B = X.reshape(-1, self.m, self.n, self.n)
        inv = batch_invariants(B, allow_degenerate=self.allow_degenerate)
        return np.column_stack([inv[c] for c in self.columns])

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.columns, dtype=object)


class PinchingGap(TransformerMixin, BaseEstimator):
    """Two columns (|A|^2, |H|^2) -> one column f = a(|H|^2) - |A|^2 - eps omega(|H|^2)."""

    def __init__(self, n: int = 8, m: int = 2, kbar: float = 1.0, eps: float | None = None):
        self.n = n
        self.m = m
        self.kbar = kbar
        self.eps = eps

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError("expected two columns (|A|^2, |H|^2)")
        self.profile_ = PinchingProfile(self.n, self.m, self.kbar, self.eps)
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "profile_")
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError("expected two columns (|A|^2, |H|^2)")
        return np.asarray(self.profile_.gap(X[:, 0], X[:, 1]), dtype=float).reshape(-1, 1)
