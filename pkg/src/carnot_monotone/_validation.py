"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .errors import CarnotError
from .lie_core import CarnotGroup
from .lines import Window


def check_points(g: CarnotGroup, X) -> np.ndarray:
    """2-d float array of points with ``g.n`` columns and finite entries."""
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != g.n:
        raise CarnotError(f"expected points with {g.n} coordinates, got {X.shape[1]}")
    return X


def check_directions(g: CarnotGroup, X) -> np.ndarray:
    """Nonzero first-layer vectors given with ``r`` or ``n`` columns; returns ``r`` columns."""
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] == g.n and g.n != g.r:
        if np.any(X[:, g.r:] != 0):
            raise CarnotError("directions must lie in the first layer")
        X = X[:, : g.r]
    if X.shape[1] != g.r:
        raise CarnotError(f"expected directions with {g.r} (or {g.n}) columns")
    if np.any(np.linalg.norm(X, axis=1) == 0):
        raise CarnotError("directions must be nonzero")
    return X


def check_set(E):
    if not hasattr(E, "member") or not hasattr(E, "group"):
        raise TypeError("expected a set oracle with 'member' and 'group'")
    return E


def check_window(g: CarnotGroup, window):
    if window is None:
        return Window.cube(g)
    if isinstance(window, Window):
        return window
    lo, hi = window
    return Window(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
