"""scikit-learn style wrappers around the simulator, the root analysis and the diagnostics.

Location arrays play the role of ``X``: a 1-d array of x values in [0, 1] or
an ``(n, 1)`` column.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_alpha, check_xi
from .config import ModelConfig, default_grid
from .engine import psi
from .engine import run as simulate
from .harness import NULL_THRESHOLD, diagnose
from .roots import condensation_predict, find_roots, root_curves


def _locations(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    X = check_array(X, ensure_2d=True)
    if X.shape[1] != 1:
        raise ValueError(f"expected a single column of locations, got {X.shape[1]} columns")
    x = X[:, 0]
    if np.any((x < 0) | (x > 1)):
        raise ValueError("locations must lie in [0, 1]")
    return x


class PsiSimulator(TransformerMixin, BaseEstimator):
    """Grow one graph on ``fit``; ``transform`` evaluates the final Psi_n at given locations."""

    def __init__(self, xi="rank 2 of 3", alpha=-0.75, steps=10_000, seed=0, n0=2, grid_points=201):
        self.xi = xi
        self.alpha = alpha
        self.steps = steps
        self.seed = seed
        self.n0 = n0
        self.grid_points = grid_points

    def fit(self, X=None, y=None):
        cfg = ModelConfig(xi=check_xi(self.xi), alpha=check_alpha(self.alpha), n0=self.n0,
                          steps=self.steps, seed=self.seed, grid=default_grid(self.grid_points))
        self.trajectory_, self.state_ = simulate(cfg, return_state=True)
        return self

    def transform(self, X):
        check_is_fitted(self, "state_")
        return np.array([psi(self.state_, x) for x in _locations(X)])


class DriftRootEstimator(BaseEstimator):
    """Zero curves of the one-dimensional drift for a fixed (xi, alpha)."""

    def __init__(self, xi="rank 2 of 3", alpha=-0.75):
        self.xi = xi
        self.alpha = alpha

    def fit(self, X=None, y=None):
        self.xi_ = check_xi(self.xi)
        self.alpha_ = check_alpha(self.alpha)
        self.report_ = condensation_predict(self.alpha_, self.xi_)
        return self

    def transform(self, X):
        """One column per zero curve, NaN where the curve is not defined."""
        check_is_fitted(self, "report_")
        x = _locations(X)
        inner = (x > 0) & (x < 1)
        out = np.full((len(x), len(self.report_.branches)), np.nan)
        if inner.any():
            uniq = np.unique(x[inner])
            pos = np.searchsorted(uniq, x[inner])
            for j, b in enumerate(root_curves(self.alpha_, self.xi_, uniq)):
                out[inner, j] = b.values[pos]
        return out

    def predict(self, X):
        """Number of stable zeros at each location."""
        check_is_fitted(self, "report_")
        return np.array([len(find_roots(x, self.alpha_, self.xi_).stable()) for x in _locations(X)])


class CondensationDetector(BaseEstimator):
    """Jump detection and hub classification over a list of trajectories."""

    def __init__(self, null_threshold=NULL_THRESHOLD, persist_change=0.05, fade_ratio=0.1,
                 min_checkpoints=6, min_id_changes=2):
        self.null_threshold = null_threshold
        self.persist_change = persist_change
        self.fade_ratio = fade_ratio
        self.min_checkpoints = min_checkpoints
        self.min_id_changes = min_id_changes

    def fit(self, X=None, y=None):
        if not 0 < self.null_threshold < 1:
            raise ValueError(f"null_threshold must lie in (0, 1), got {self.null_threshold}")
        self.is_fitted_ = True
        return self

    def _diagnose(self, trajectories):
        check_is_fitted(self, "is_fitted_")
        kw = dict(persist_change=self.persist_change, fade_ratio=self.fade_ratio,
                  min_checkpoints=self.min_checkpoints, min_id_changes=self.min_id_changes)
        return [diagnose(t, self.null_threshold, **kw) for t in trajectories]

    def transform(self, trajectories):
        """Rows of (jump detected, location or NaN, size)."""
        rows = [(float(d.jump_detected), np.nan if d.location is None else d.location, d.size)
                for d in self._diagnose(trajectories)]
        return np.array(rows, dtype=float).reshape(-1, 3)

    def predict(self, trajectories):
        """Hub classification per trajectory."""
        return np.array([d.hub for d in self._diagnose(trajectories)], dtype=object)


__all__ = ["CondensationDetector", "DriftRootEstimator", "PsiSimulator"]
