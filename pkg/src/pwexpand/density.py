"""Ulam discretization of the transfer operator and invariant densities.

Bins are uniform over the domain of the map. Entry ``(i, j)`` of the
transfer matrix is the fraction of bin ``j`` that the map sends into bin
``i``; it is computed exactly (up to root solving) from the preimages of bin
edges under each monotone branch, so every column sums to one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .config import TOL
from .errors import NonConvergence


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    matrix: sp.csc_matrix
    edges: np.ndarray

    @property
    def bins(self):
        return self.matrix.shape[0]

    def column_sums(self):
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    def __matmul__(self, v):
        return self.matrix @ v


@dataclass(frozen=True, eq=False)
class UlamDensity:
    """Piecewise-constant density; ``weights`` are bin masses summing to 1."""

    edges: np.ndarray
    weights: np.ndarray
    iterations: int = 0

    @property
    def bins(self):
        return len(self.weights)

    @property
    def width(self):
        return float(self.edges[1] - self.edges[0])

    @property
    def values(self):
        return self.weights / self.width

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        i = np.clip(((x - self.edges[0]) / self.width).astype(int), 0, self.bins - 1)
        return self.values[i]

    def cdf(self):
        """Cumulative mass at the right edge of every bin."""
        return np.cumsum(self.weights)

    def mass(self, lo, hi):
        """``mu((lo, hi))`` for the piecewise-constant density."""
        left = np.clip(self.edges[:-1], lo, hi)
        right = np.clip(self.edges[1:], lo, hi)
        return float(np.sum(self.values * (right - left)))

    def bounds(self):
        v = self.values
        return float(v.min()), float(v.max())

    def total_variation(self):
        return float(np.sum(np.abs(np.diff(self.values))))

    def to_text(self):
        lines = [f"{c:.17g} {v:.17g}" for c, v in zip(self.centers, self.values)]
        return "\n".join(lines) + "\n"


def bin_edges(domain, bins):
    if bins < 2:
        raise ValueError("need at least two bins")
    return np.linspace(domain[0], domain[1], bins + 1)


def ulam_matrix(T, bins):
    """Column-stochastic Ulam matrix of ``T`` on ``bins`` uniform bins."""
    edges = bin_edges(T.domain, bins)
    lo, h = edges[0], edges[1] - edges[0]
    rows, cols, data = [], [], []
    for br in T.branches:
        l, r = br.left, br.right
        dom = edges[(edges > l) & (edges < r)]
        ylo, yhi = br.image
        img = edges[(edges > ylo) & (edges < yhi)]
        pre = br.inverse(img) if img.size else np.empty(0)
        pts = np.unique(np.concatenate(([l, r], dom, pre)))
        pts = pts[(pts >= l) & (pts <= r)]
        s0, s1 = pts[:-1], pts[1:]
        length = s1 - s0
        keep = length > 0
        s0, s1, length = s0[keep], s1[keep], length[keep]
        mid = 0.5 * (s0 + s1)
        j = np.clip(((mid - lo) / h).astype(np.int64), 0, bins - 1)
        i = np.clip(((br.f(mid) - lo) / h).astype(np.int64), 0, bins - 1)
        rows.append(i)
        cols.append(j)
        data.append(length / h)
    M = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows),
                                              np.concatenate(cols))),
                      shape=(bins, bins)).tocsc()
    M.sum_duplicates()
    return TransferMatrix(M, edges)


def stationary_density(M, tol=None, max_iter=20000):
    """Fixed point of the Ulam matrix by power iteration from uniform mass.

    Raises :class:`NonConvergence` when successive iterates still differ by
    ``tol`` in L1 after ``max_iter`` steps, which usually means the map is
    (close to) decomposable or has periodic components.
    """
    tol = TOL.density_l1 if tol is None else tol
    n = M.bins
    v = np.full(n, 1.0 / n)
    A = M.matrix
    for it in range(1, max_iter + 1):
        w = A @ v
        w /= w.sum()
        diff = float(np.abs(w - v).sum())
        v = w
        if diff < tol:
            return UlamDensity(M.edges, v, it)
    raise NonConvergence(
        f"power iteration did not settle within {max_iter} steps (last L1 step {diff:.3e})")


def fixed_point_residual(M, d):
    return float(np.abs(M.matrix @ d.weights - d.weights).sum())


class DensityBounds(NamedTuple):
    min: float
    max: float
    passed: bool | None


def density_bounds(d, gamma=None):
    """``(min, max, passed)``; ``passed`` checks ``gamma <= phi <= 1/gamma``."""
    lo, hi = d.bounds()
    passed = None if gamma is None else bool(lo >= gamma and hi <= 1.0 / gamma)
    return DensityBounds(lo, hi, passed)


def liverani_lower_bound(T, N, S=None):
    """``2^-2 * S^-N`` with ``S`` defaulting to ``sup |T'|``.

    The sup norm in the source bound can be read as ``sup |T|`` (at most 1,
    giving a useless bound of 1/4) or ``sup |T'|``; the derivative reading is
    the default because it is the conservative one.
    """
    if S is None:
        S = T.bounds.Lam if T.bounds else max(
            float(np.max(np.abs(br.df(br.grid())))) for br in T.branches)
    return 0.25 * float(S) ** (-int(N))


def l1_distance(d1, d2):
    """L1 distance between densities on nested uniform grids."""
    if d1.bins > d2.bins:
        d1, d2 = d2, d1
    factor = d2.bins // d1.bins
    if factor * d1.bins != d2.bins:
        raise ValueError("bin counts must divide each other")
    coarse = np.repeat(d1.values, factor)
    return float(np.sum(np.abs(coarse - d2.values)) * d2.width)
