"""scikit-learn style wrappers around the functional API.

The estimators take a set oracle (or a group) in ``fit`` where scikit-learn
would take a data matrix, and keep their results in trailing-underscore
attributes.  Parameters are plain constructor arguments, so ``get_params``,
``set_params`` and ``clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_directions, check_points, check_set, check_window
from .condh import gamma_rank
from .density import box_gauge, classify_point, density_profiles
from .lines import LineMeasureSampler
from .monotone import monotonicity_fraction
from .perimeter import estimate_perimeter


class MonotonicityEstimator(BaseEstimator):
    """Estimate the share of non-monotone lines of a set.

    Parameters
    ----------
    window : Window or (lo, hi), optional
        Lines must meet this box; defaults to the unit cube.
    count : int
        Number of sampled lines.
    h, min_run : float
        Grid step and resolution threshold (``min_run`` defaults to ``4 h``).
    seed : int
    """

    def __init__(self, window=None, count=10000, h=0.01, min_run=None, seed=0):
        self.window = window
        self.count = count
        self.h = h
        self.min_run = min_run
        self.seed = seed

    def fit(self, E, y=None):
        E = check_set(E)
        g = E.group
        self.report_ = monotonicity_fraction(E, LineMeasureSampler(g, self.seed), check_window(g, self.window),
                                             self.count, h=self.h, min_run=self.min_run)
        self.fraction_ = self.report_.fraction.value
        self.stderr_ = self.report_.fraction.stderr
        return self

    def score(self, E, y=None):
        """Share of monotone lines (higher is more monotone)."""
        return 1.0 - self.fit(E).fraction_


class PerimeterEstimator(BaseEstimator):
    def __init__(self, window=None, count=10000, h=0.01, min_run=None, seed=0):
        self.window = window
        self.count = count
        self.h = h
        self.min_run = min_run
        self.seed = seed

    def fit(self, E, y=None):
        E = check_set(E)
        g = E.group
        self.estimate_ = estimate_perimeter(E, check_window(g, self.window), LineMeasureSampler(g, self.seed),
                                            self.count, self.h, self.min_run)
        self.value_ = self.estimate_.value
        self.stderr_ = self.estimate_.stderr
        return self


class DensityClassifier(TransformerMixin, BaseEstimator):
    """Classify points as interior, exterior, boundary or undetermined for a fitted set.

    ``transform`` returns the density ratios (one column per radius),
    ``predict`` the class labels.
    """

    def __init__(self, radii=(0.8, 0.4, 0.2, 0.1), eps=0.05, r_min=0.0, samples_per_radius=400, seed=0):
        self.radii = radii
        self.eps = eps
        self.r_min = r_min
        self.samples_per_radius = samples_per_radius
        self.seed = seed

    def fit(self, E, y=None):
        self.set_ = check_set(E)
        self.gauge_ = box_gauge(E.group)
        return self

    def _profiles(self, X):
        check_is_fitted(self, "set_")
        X = check_points(self.set_.group, X)
        return density_profiles(self.set_, X, self.radii, self.samples_per_radius, self.gauge_, self.seed,
                                self.set_.group)

    def transform(self, X):
        return np.array([p.values for p in self._profiles(X)])

    def predict(self, X):
        return np.array([classify_point(p, self.eps, self.r_min) for p in self._profiles(X)])


class GammaRankAnalyzer(TransformerMixin, BaseEstimator):
    """Rank of the differential of ``Gamma_p`` at ``(X, .., X)`` for each row ``X``."""

    def __init__(self, p=2, step=1e-5, rtol=1e-7):
        self.p = p
        self.step = step
        self.rtol = rtol

    def fit(self, group, y=None):
        self.group_ = group
        return self

    def transform(self, X):
        check_is_fitted(self, "group_")
        X = check_directions(self.group_, X)
        return np.array([gamma_rank(self.group_, x, self.p, self.step, self.rtol).jacobian_rank for x in X])

    def predict(self, X):
        """``True`` where the differential is onto."""
        return self.transform(X) == self.group_.n
