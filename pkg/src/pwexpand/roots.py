"""Inverses of monotone branches by bracketed bisection plus Newton polish."""

import math

import numpy as np

from .config import TOL
from .errors import RootSolveFailure


def monotone_inverse(f, df, y, lo, hi, increasing=True, width=None,
                     newton_steps=2):
    """Solve ``f(x) = y`` for ``x`` in ``[lo, hi]``, elementwise.

    ``f`` and ``df`` are numpy-vectorized callables of one argument. ``y``,
    ``lo`` and ``hi`` broadcast together. Targets must lie between ``f(lo)``
    and ``f(hi)``; anything else means the branch is not monotone on the
    bracket (or the target is outside its image) and raises
    :class:`RootSolveFailure`.
    """
    width = TOL.inverse_width if width is None else width
    y, lo, hi = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                      for v in (y, lo, hi)))
    lo = lo.copy()
    hi = hi.copy()
    if y.size == 0:
        return np.empty(y.shape)
    flo, fhi = f(lo), f(hi)
    if not increasing:
        flo, fhi = fhi, flo
    slack = 1e-12 * (1.0 + np.abs(y))
    bad = (y < flo - slack) | (y > fhi + slack) | (flo > fhi + slack)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise RootSolveFailure(
            f"target {y.flat[k]!r} not bracketed by [{flo.flat[k]!r}, "
            f"{fhi.flat[k]!r}] on [{lo.flat[k]!r}, {hi.flat[k]!r}]"
        )
    span = float(np.max(hi - lo))
    steps = max(0, math.ceil(math.log2(span / width))) if span > width else 0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        below = fm < y if increasing else fm > y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(newton_steps):
        d = df(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = (f(x) - y) / d
        cand = x - step
        ok = np.isfinite(cand) & (cand >= lo) & (cand <= hi)
        x = np.where(ok, cand, x)
    return x


def scalar_inverse(f, df, y, lo, hi, increasing=True, width=None):
    """Scalar convenience wrapper around :func:`monotone_inverse`."""
    fv = lambda t: np.asarray(f(t), dtype=float)  # noqa: E731
    dv = lambda t: np.asarray(df(t), dtype=float)  # noqa: E731
    return float(monotone_inverse(fv, dv, y, lo, hi, increasing, width))


def bracketed_root(g, lo, hi, width=None, maxiter=200):
    """Root of a scalar function with a sign change on ``[lo, hi]``."""
    width = TOL.inverse_width if width is None else width
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    if (glo > 0) == (ghi > 0):
        raise RootSolveFailure(f"no sign change on [{lo!r}, {hi!r}]")
    for _ in range(maxiter):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)
