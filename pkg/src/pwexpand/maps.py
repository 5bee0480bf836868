"""Piecewise monotone expanding maps of an interval and their partitions.

A :class:`PiecewiseMap` is given by breakpoints ``b_0 < ... < b_p`` and one
expression per open cell ``(b_{k-1}, b_k)``. The map is undefined at the
breakpoints themselves; evaluating there raises :class:`BreakpointHit`.
Cells and branches are numbered from 1 in itinerary words.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .config import TOL
from .errors import (BreakpointHit, CellCountExceeded, InvalidMap,
                     OrbitTruncated)
from .roots import monotone_inverse

REFERENCE = (-1.0, 1.0)
IMAGE_SLACK = 1e-9


@dataclass(frozen=True)
class MapBounds:
    """Derivative bounds audited on a sample grid (not certified)."""

    lam: float
    Lam: float
    L: float
    checked_on_grid: bool = True


@dataclass(frozen=True)
class Branch:
    left: float
    right: float
    expr: ex.Expr
    a: float = 0.0
    increasing: bool = True
    case: str | None = None

    @functools.cached_property
    def _f(self):
        return ex.compile_expr(self.expr, "numpy")

    @functools.cached_property
    def _df(self):
        return ex.compile_expr(ex.diff(self.expr, "x"), "numpy")

    @functools.cached_property
    def _d2f(self):
        return ex.compile_expr(ex.diff(ex.diff(self.expr, "x"), "x"), "numpy")

    @functools.cached_property
    def _daf(self):
        return ex.compile_expr(ex.diff(self.expr, "a"), "numpy")

    def f(self, x):
        return self._f(x, self.a)

    def df(self, x):
        return self._df(x, self.a)

    def d2f(self, x):
        return self._d2f(x, self.a)

    def daf(self, x):
        return self._daf(x, self.a)

    @functools.cached_property
    def image(self):
        """Closure of the image, from the continuous extension at the ends."""
        lo, hi = (float(v) for v in self.f(np.array([self.left, self.right])))
        return (lo, hi) if lo <= hi else (hi, lo)

    def inverse(self, y):
        return monotone_inverse(self.f, self.df, y, self.left, self.right,
                                self.increasing)

    def grid(self, n=None):
        n = TOL.deriv_grid if n is None else n
        return np.linspace(self.left, self.right, n + 2)


@dataclass(frozen=True)
class PiecewiseMap:
    breakpoints: tuple
    branches: tuple
    a: float = 0.0
    bounds: MapBounds | None = field(default=None, compare=False)

    @property
    def p(self):
        return len(self.branches)

    @property
    def domain(self):
        return (self.breakpoints[0], self.breakpoints[-1])

    @classmethod
    def from_exprs(cls, breakpoints, exprs, a=0.0, domain=REFERENCE,
                   audit=True, cases=None):
        """Build a map from interior breakpoints and branch expressions.

        ``breakpoints`` lists the interior points only; the domain ends are
        added. Expressions may be strings in the DSL.
        """
        pts = (float(domain[0]),) + tuple(float(b) for b in breakpoints) + \
            (float(domain[1]),)
        exprs = [ex.as_expr(e) for e in exprs]
        if len(exprs) != len(pts) - 1:
            raise InvalidMap(f"{len(pts) - 1} cells but {len(exprs)} branches")
        if any(b1 <= b0 + TOL.breakpoint for b0, b1 in zip(pts, pts[1:])):
            raise InvalidMap(f"breakpoints not strictly increasing: {pts}")
        cases = cases or [None] * len(exprs)
        branches = []
        for k, e in enumerate(exprs):
            probe = Branch(pts[k], pts[k + 1], e, float(a))
            mid = np.array([0.5 * (pts[k] + pts[k + 1])])
            increasing = bool(probe.df(mid)[0] > 0)
            branches.append(Branch(pts[k], pts[k + 1], e, float(a), increasing,
                                   cases[k]))
        T = cls(pts, tuple(branches), float(a))
        bounds = audit_branches(T) if audit else None
        return cls(pts, tuple(branches), float(a), bounds)

    # evaluation ------------------------------------------------------------

    def locate(self, x, tol=None):
        """Index (0-based) of the cell containing scalar ``x``."""
        tol = TOL.breakpoint if tol is None else tol
        lo, hi = self.domain
        if not lo - tol <= x <= hi + tol:
            raise ValueError(f"x={x!r} outside the domain [{lo}, {hi}]")
        i = int(np.searchsorted(self.breakpoints, x))
        for j in (i - 1, i):
            if 0 <= j <= self.p and abs(x - self.breakpoints[j]) < tol:
                raise BreakpointHit(x, j)
        return i - 1

    def locate_array(self, x):
        """Vectorized :meth:`locate`; ``-1`` marks breakpoint hits."""
        x = np.asarray(x, dtype=float)
        b = np.asarray(self.breakpoints)
        idx = np.searchsorted(b, x) - 1
        near = np.min(np.abs(x[..., None] - b), axis=-1) < TOL.breakpoint
        idx = np.where(near | (idx < 0) | (idx >= self.p), -1, idx)
        return idx

    def __call__(self, x):
        return eval_map(self, x)

    def values(self, x):
        """Vectorized evaluation; NaN at breakpoints."""
        x = np.asarray(x, dtype=float)
        idx = self.locate_array(x)
        out = np.full(x.shape, np.nan)
        for k, br in enumerate(self.branches):
            m = idx == k
            if np.any(m):
                out[m] = br.f(x[m])
        return out

    def derivatives(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.locate_array(x)
        out = np.full(x.shape, np.nan)
        for k, br in enumerate(self.branches):
            m = idx == k
            if np.any(m):
                out[m] = br.df(x[m])
        return out

    def exprs(self):
        return [br.expr for br in self.branches]


def audit_branches(T, n=None):
    """Check monotonicity, expansion and image containment on sample grids."""
    lam, Lam, L = math.inf, 0.0, 0.0
    lo, hi = T.domain
    for k, br in enumerate(T.branches, start=1):
        xs = br.grid(n)
        vals = br.f(xs)
        d = br.df(xs)
        if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(d)):
            raise InvalidMap(f"branch {k} is not finite on its closed cell")
        steps = np.diff(vals)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise InvalidMap(f"branch {k} is not strictly monotone at a={T.a}")
        ad = np.abs(d)
        lam = min(lam, float(ad.min()))
        Lam = max(Lam, float(ad.max()))
        L = max(L, float(np.max(np.abs(br.d2f(xs)))))
        ilo, ihi = br.image
        if ilo < lo - IMAGE_SLACK or ihi > hi + IMAGE_SLACK:
            raise InvalidMap(
                f"branch {k} image [{ilo}, {ihi}] leaves the domain at a={T.a}")
    if lam <= 1.0:
        raise InvalidMap(f"expansion fails on the grid: min |T'| = {lam} at a={T.a}")
    return MapBounds(lam, Lam, L)


def eval_map(T, x):
    k = T.locate(x)
    return float(T.branches[k].f(x))


def eval_deriv(T, x):
    k = T.locate(x)
    return float(T.branches[k].df(x))


# partitions -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Partition:
    """Cells ``(points[i], points[i+1])`` with itinerary ``words[i]``."""

    points: np.ndarray
    words: np.ndarray

    def __post_init__(self):
        self.points.setflags(write=False)
        self.words.setflags(write=False)

    @property
    def depth(self):
        return self.words.shape[1]

    def __len__(self):
        return len(self.points) - 1

    @property
    def cells(self):
        return list(zip(self.points[:-1].tolist(), self.points[1:].tolist()))

    def word(self, i):
        return tuple(int(v) for v in self.words[i])

    def lengths(self):
        return np.diff(self.points)

    def as_dict(self):
        return {self.word(i): c for i, c in enumerate(self.cells)}

    def locate(self, x):
        i = int(np.searchsorted(self.points, x)) - 1
        return min(max(i, 0), len(self) - 1)


def branch_partition(T):
    pts = np.array(T.breakpoints, dtype=float)
    words = np.arange(1, T.p + 1, dtype=np.int16)[:, None]
    return Partition(pts, words)


def _cell_guard(T, j):
    Lam = T.bounds.Lam if T.bounds else max(
        float(np.max(np.abs(br.df(br.grid(64))))) for br in T.branches)
    if j * math.log2(max(Lam, T.p, 2.0)) > TOL.log2_cell_guard:
        raise CellCountExceeded(
            f"refinement depth {j} exceeds the guard j*log2(Lambda) <= "
            f"{TOL.log2_cell_guard:g}")


def pullback(T, P):
    """``{D_k ∩ T^{-1}(C)}`` for cells ``C`` of ``P``: the next refinement."""
    new_pts = [np.asarray(T.breakpoints, dtype=float)]
    inner = P.points[1:-1]
    for br in T.branches:
        ylo, yhi = br.image
        tol = TOL.breakpoint
        targets = inner[(inner > ylo + tol) & (inner < yhi - tol)]
        if targets.size:
            new_pts.append(br.inverse(targets))
    pts = np.unique(np.concatenate(new_pts))
    pts = pts[np.concatenate(([True], np.diff(pts) > 0))]
    lo, hi = pts[:-1], pts[1:]
    keep = hi - lo > 0
    lo, hi = lo[keep], hi[keep]
    mids = 0.5 * (lo + hi)
    first = np.empty(len(mids), dtype=np.int16)
    rest = np.empty((len(mids), P.depth), dtype=np.int16)
    b = np.asarray(T.breakpoints)
    owner = np.clip(np.searchsorted(b, mids) - 1, 0, T.p - 1)
    for k, br in enumerate(T.branches):
        m = owner == k
        if not np.any(m):
            continue
        y = br.f(mids[m])
        cell = np.clip(np.searchsorted(P.points, y) - 1, 0, len(P) - 1)
        first[m] = k + 1
        rest[m] = P.words[cell]
    pts = np.concatenate((lo, hi[-1:]))
    return Partition(pts, np.concatenate((first[:, None], rest), axis=1))


def refine_partition(T, j, max_cells=None):
    """The partition into maximal intervals of continuity of ``T^j``."""
    if j < 1:
        raise ValueError("j must be a positive integer")
    _cell_guard(T, j)
    max_cells = TOL.max_cells if max_cells is None else max_cells
    P = branch_partition(T)
    for _ in range(j - 1):
        P = pullback(T, P)
        if len(P) > max_cells:
            raise CellCountExceeded(f"{len(P)} cells exceed max_cells={max_cells}")
    return P


def cell_images(T, P):
    """Closures of ``T^j(cell)`` for every cell of a depth-``j`` partition."""
    lo = P.points[:-1].copy()
    hi = P.points[1:].copy()
    for step in range(P.depth):
        letters = P.words[:, step]
        for k, br in enumerate(T.branches, start=1):
            m = letters == k
            if np.any(m):
                lo[m], hi[m] = br.f(lo[m]), br.f(hi[m])
    return np.minimum(lo, hi), np.maximum(lo, hi)


# orbits ---------------------------------------------------------------------

def iterate(T, x0, n):
    """``[x0, T x0, ..., T^n x0]``; raises :class:`OrbitTruncated` on a hit."""
    orbit = [float(x0)]
    x = float(x0)
    for k in range(n):
        try:
            i = T.locate(x)
        except BreakpointHit:
            raise OrbitTruncated(k, orbit) from None
        x = float(T.branches[i].f(x))
        orbit.append(x)
    return orbit


# conjugation ----------------------------------------------------------------

def conjugate_exprs(breakpoints, exprs, u, v):
    """Conjugate expressions on ``[u, v]`` by ``h(x) = 2(x-u)/(v-u) - 1``."""
    u, v = ex.as_expr(u), ex.as_expr(v)
    width = v - u
    h_inv = (ex.X + 1) * width / 2 + u
    new_b = [2 * (ex.as_expr(b) - u) / width - 1 for b in breakpoints]
    new_f = [2 * (ex.substitute(ex.as_expr(f), {"x": h_inv}) - u) / width - 1
             for f in exprs]
    return new_b, new_f


def conjugate_to_reference(T):
    """Affinely conjugate a map on ``[u, v]`` to one on ``[-1, 1]``."""
    u, v = T.domain
    if not u < v:
        raise ValueError("domain must satisfy u < v")
    if (u, v) == REFERENCE:
        return T
    b_exprs, f_exprs = conjugate_exprs(T.breakpoints[1:-1], T.exprs(), u, v)
    pts = [float(ex.evaluate(b, a=T.a)) for b in b_exprs]
    return PiecewiseMap.from_exprs(pts, f_exprs, a=T.a,
                                   audit=T.bounds is not None)
