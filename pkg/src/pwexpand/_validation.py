"""Input validation shared by the estimator wrappers."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .family import MapFamily
from .maps import PiecewiseMap


def check_parameters(X, F=None):
    """1-D float array of parameters from ``(n,)`` or ``(n, 1)`` input."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X = check_array(X, dtype=float)
    if X.shape[1] != 1:
        raise ValueError(f"expected one parameter column, got {X.shape[1]}")
    a = X[:, 0]
    if F is not None:
        lo, hi = F.interval
        bad = (a < lo) | (a > hi)
        if bad.any():
            raise ValueError(f"parameters {a[bad][:3]} lie outside I=[{lo}, {hi}]")
    return a


def check_points(x, domain=(-1.0, 1.0)):
    x = check_array(np.atleast_1d(np.asarray(x, dtype=float)), ensure_2d=False)
    if np.any(x < domain[0]) or np.any(x > domain[1]):
        raise ValueError(f"points must lie in [{domain[0]}, {domain[1]}]")
    return x


def check_map(T):
    if not isinstance(T, PiecewiseMap):
        raise TypeError(f"expected a PiecewiseMap, got {type(T).__name__}")
    return T


def check_family(F):
    if not isinstance(F, MapFamily):
        raise TypeError(f"expected a MapFamily, got {type(F).__name__}")
    return F


def check_positive_int(value, name):
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
