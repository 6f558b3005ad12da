"""scikit-learn style wrappers: one row of X is one spectrum lambda.

These transformers make the estimators usable inside pipelines and grid
searches; ``fit`` only validates the feature count, all work is in
``transform``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .haar import SamplerConfig
from .interlace import J_n_integral, recursive_I
from .orbit_mc import DEFAULT_MAX_SAMPLES, estimate_I
from .spectra import A_n, L_n, tilde_beta


class _SpectrumTransformer(TransformerMixin, BaseEstimator):
    min_features = 2

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[1] < self.min_features:
            raise ValueError(f"need at least {self.min_features} columns (one per eigenvalue)")
        self.n_features_in_ = X.shape[1]
        return self

    def _check(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return X


class OrbitConcentrationMC(_SpectrumTransformer):
    """Monte Carlo I_n(lambda; radius); columns (p_hat, ci_low, ci_high)."""

    def __init__(self, radius=1.0, n_samples=10**6, seed=0, target_ci=None,
                 max_samples=DEFAULT_MAX_SAMPLES):
        self.radius = radius
        self.n_samples = n_samples
        self.seed = seed
        self.target_ci = target_ci
        self.max_samples = max_samples

    def transform(self, X):
        X = self._check(X)
        cfg = SamplerConfig(seed=self.seed, n=X.shape[1])
        self.estimates_ = [estimate_I(row, self.radius, self.n_samples, cfg,
                                      self.target_ci, self.max_samples) for row in X]
        return np.array([[e.p_hat, e.ci_low, e.ci_high] for e in self.estimates_])


class RecursiveOrbitIntegral(_SpectrumTransformer):
    """Deterministic I_n(lambda; radius) from the interlacing recursion; columns (value, error)."""

    def __init__(self, radius=1.0, rtol=1e-6, m_nodes=None):
        self.radius = radius
        self.rtol = rtol
        self.m_nodes = m_nodes

    def fit(self, X, y=None):
        super().fit(X, y)
        if self.n_features_in_ > 4:
            raise ValueError("the recursion is available for n <= 4")
        return self

    def transform(self, X):
        X = self._check(X)
        self.results_ = [recursive_I(row, self.radius, self.rtol, self.m_nodes) for row in X]
        return np.array([[r.value, r.error] for r in self.results_])


class SpectralDensityFeatures(_SpectrumTransformer):
    """Closed-form density side: columns (A_n, L_n, tilde_beta, norm), optionally J_n."""

    def __init__(self, include_J=False, rtol=1e-6):
        self.include_J = include_J
        self.rtol = rtol

    def transform(self, X):
        X = self._check(X)
        cols = [[A_n(r), L_n(r), tilde_beta(r), float(np.linalg.norm(r))] for r in X]
        if self.include_J:
            for c, r in zip(cols, X):
                c.append(J_n_integral(r, self.rtol).value)
        return np.array(cols)

    def get_feature_names_out(self, input_features=None):
        names = ["A_n", "L_n", "tilde_beta", "norm"]
        return np.array(names + (["J_n"] if self.include_J else []), dtype=object)
