"""Estimator-style wrappers over the functional API.

Both classes follow the scikit-learn conventions for parameters
(``get_params``/``set_params``, constructor arguments stored verbatim) and
fitted attributes (trailing underscore). The inputs are maps and parameter
columns rather than feature matrices, so they are not meant for generic
pipelines.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (check_family, check_map, check_parameters,
                          check_points, check_positive_int)
from .density import fixed_point_residual, stationary_density, ulam_matrix
from .typicality import DEFAULT_THRESHOLD, sweep


class UlamDensityEstimator(BaseEstimator):
    """Invariant density of a map by Ulam's method.

    Parameters
    ----------
    bins : int
        Number of uniform bins on the domain.
    tol : float, optional
        L1 stopping tolerance of the power iteration.
    max_iter : int
    """

    def __init__(self, bins=4096, tol=None, max_iter=20000):
        self.bins = bins
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, T, y=None):
        check_map(T)
        bins = check_positive_int(self.bins, "bins")
        M = ulam_matrix(T, bins)
        self.density_ = stationary_density(M, self.tol, self.max_iter)
        self.edges_ = self.density_.edges
        self.n_iter_ = self.density_.iterations
        self.residual_ = fixed_point_residual(M, self.density_)
        self.domain_ = T.domain
        return self

    def density(self, x):
        check_is_fitted(self, "density_")
        return self.density_(check_points(x, self.domain_))

    def score_samples(self, x):
        """Log density at ``x``; ``-inf`` where the density vanishes."""
        with np.errstate(divide="ignore"):
            return np.log(self.density(x))

    def transform(self, x):
        return self.density(x)[:, None]


class BirkhoffTypicality(BaseEstimator):
    """KS distance between marked orbits and Ulam densities over parameters.

    Parameters
    ----------
    family : MapFamily
    n, bins : int
        Kept orbit length and number of bins.
    threshold : float
        KS distance below which a parameter counts as typical.
    grid : int
        Size of the golden-offset grid used when ``fit`` gets no parameters.
    """

    def __init__(self, family=None, n=200_000, bins=4096,
                 threshold=DEFAULT_THRESHOLD, grid=200):
        self.family = family
        self.n = n
        self.bins = bins
        self.threshold = threshold
        self.grid = grid

    def _sweep(self, a):
        F = check_family(self.family)
        return sweep(F, a, n=check_positive_int(self.n, "n"),
                     bins=check_positive_int(self.bins, "bins"),
                     threshold=self.threshold, check=False)

    def fit(self, X=None, y=None):
        F = check_family(self.family)
        params = check_positive_int(self.grid, "grid") if X is None \
            else check_parameters(X, F)
        report = self._sweep(params)
        self.report_ = report
        self.parameters_ = np.array([r["a"] for r in report.rows])
        self.ks_ = report.ks
        self.fraction_typical_ = report.fraction_below
        return self

    def transform(self, X):
        """KS distance per parameter, as a column."""
        check_is_fitted(self, "report_")
        a = check_parameters(X, self.family)
        return self._sweep(a).ks[:, None]

    def predict(self, X):
        return self.transform(X)[:, 0] < self.threshold
