"""Orbit engines for a family evaluated at many parameters at once.

Two backends share the same breakpoint rule:

* ``FloatEngine`` advances a whole vector of parameters per step in float64.
* ``ExactEngine`` follows a single orbit with gmpy2 ``mpfr`` numbers whose
  precision shrinks as the orbit proceeds, so that every computed iterate is
  correct to double precision. It exists because float64 orbits of maps with
  dyadic affine branches (the doubling map being the standard example) are
  exact binary shifts and collapse onto breakpoints after ~50 steps.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import expr as ex
from .config import TOL


class FloatEngine:
    def __init__(self, family):
        self.family = family
        self.p = family.p
        self._b = [ex.compile_expr(b, "numpy") for b in family.breakpoint_exprs]
        self._db = [ex.compile_expr(ex.diff(b, "a"), "numpy")
                    for b in family.breakpoint_exprs]
        self._f = [ex.compile_expr(f, "numpy") for f in family.branch_exprs]
        self._dfx = [ex.compile_expr(ex.diff(f, "x"), "numpy")
                     for f in family.branch_exprs]
        self._dfa = [ex.compile_expr(ex.diff(f, "a"), "numpy")
                     for f in family.branch_exprs]
        self._X = ex.compile_expr(family.point_expr, "numpy")
        self._dX = ex.compile_expr(ex.diff(family.point_expr, "a"), "numpy")

    def breakpoints(self, a):
        """Matrix of breakpoints, one row per parameter, ends included."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        cols = [np.full(a.shape, -1.0)]
        cols += [bf(0.0, a) for bf in self._b]
        cols.append(np.full(a.shape, 1.0))
        return np.stack(cols, axis=-1)

    def breakpoint_slopes(self, a):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        if not self._db:
            return np.zeros(a.shape + (0,))
        return np.stack([d(0.0, a) for d in self._db], axis=-1)

    def point(self, a):
        return self._X(0.0, a)

    def point_deriv(self, a):
        return self._dX(0.0, a)

    def locate(self, x, B, tol=None):
        """Cell index per element and a mask of breakpoint hits."""
        tol = TOL.breakpoint if tol is None else tol
        idx = np.sum(x[:, None] > B[:, 1:-1], axis=1)
        hit = (np.min(np.abs(x[:, None] - B), axis=1) < tol) | \
            (x <= B[:, 0]) | (x >= B[:, -1])
        return idx, hit

    def apply(self, fs, x, a, idx):
        out = np.empty_like(x)
        for k, f in enumerate(fs):
            m = idx == k
            if np.any(m):
                out[m] = f(x[m], a[m])
        return out

    def step(self, x, a, B):
        idx, hit = self.locate(x, B)
        return self.apply(self._f, x, a, idx), idx, hit

    def xi(self, a, j, with_deriv=False):
        """``xi_0..xi_j`` (rows) for a vector of parameters.

        Returns ``(xs, dxs, itin, valid)``: iterates, their parameter
        derivatives (when requested), visited cell indices and a mask that
        is False from the first breakpoint hit onwards.
        """
        a = np.atleast_1d(np.asarray(a, dtype=float))
        B = self.breakpoints(a)
        x = self.point(a)
        d = self.point_deriv(a) if with_deriv else None
        xs, dxs, itin, valid = [x], [d], [], [np.ones(a.shape, bool)]
        alive = np.ones(a.shape, bool)
        for _ in range(j):
            idx, hit = self.locate(x, B)
            alive = alive & ~hit
            idx = np.where(alive, idx, 0)
            xc = np.where(alive, x, 0.5 * (B[:, 0] + B[:, 1]))
            x_new = self.apply(self._f, xc, a, idx)
            if with_deriv:
                d = self.apply(self._dfa, xc, a, idx) + \
                    self.apply(self._dfx, xc, a, idx) * d
            x = np.where(alive, x_new, np.nan)
            xs.append(x)
            dxs.append(np.where(alive, d, np.nan) if with_deriv else None)
            itin.append(np.where(alive, idx, -1))
            valid.append(alive.copy())
        return xs, dxs, itin, valid

    def tangent_product(self, a, j):
        """``(T_a^j)'(X(a))`` for each parameter (NaN after a hit)."""
        xs, _, itin, valid = self.xi(a, j)
        a = np.atleast_1d(np.asarray(a, dtype=float))
        prod = np.ones(a.shape)
        out = [prod.copy()]
        for i in range(j):
            idx = np.where(itin[i] >= 0, itin[i], 0)
            xc = np.where(valid[i + 1], xs[i], 0.0)
            prod = prod * self.apply(self._dfx, xc, a, idx)
            out.append(np.where(valid[i + 1], prod, np.nan))
        return out


def golden_offset():
    return (math.sqrt(5.0) - 1.0) / 2.0


class ExactEngine:
    """Single exact orbit with shrinking precision.

    The parameter is ``lo + (hi - lo) * (i + u) / k`` with ``u`` the golden
    ratio conjugate, so grid parameters are irrational and their orbits are
    not eventually periodic for trivial arithmetic reasons.
    """

    GUARD_BITS = 96
    RESET_EVERY = 512

    def __init__(self, family, expansion=None):
        import gmpy2

        self.gmpy2 = gmpy2
        self.family = family
        Lam = expansion or family.bounds.Lam
        self.bits_per_step = max(1.0, math.log2(max(Lam, 2.0)))

    def precision_for(self, steps):
        return int(steps * self.bits_per_step) + self.GUARD_BITS

    def grid_parameter(self, i, k, prec):
        g = self.gmpy2
        lo, hi = self.family.interval_exact
        ctx = g.get_context()
        ctx.precision = prec
        u = (g.sqrt(g.mpfr(5)) - 1) / 2
        return g.mpfr(_mpq(lo)) + g.mpfr(_mpq(hi - lo)) * (g.mpfr(i) + u) / k

    def orbit(self, a, n_steps, sink, nudge=None):
        """Feed ``float(xi_j)`` for j = 0..n_steps to ``sink``.

        ``a`` is an mpfr parameter (full precision). Returns the number of
        breakpoint hits and the step where the orbit was truncated (or None).
        Breakpoint proximity and cell lookup use the float value of the
        iterate: the tolerance is far above float64 rounding.
        """
        g = self.gmpy2
        fam = self.family
        ctx = g.get_context()
        prec = self.precision_for(n_steps)
        ctx.precision = prec
        b = [ex.compile_expr(e, "mpfr", prec)(0, a) for e in fam.breakpoint_exprs]
        pts = np.array([-1.0] + [float(v) for v in b] + [1.0])
        inner = pts[1:-1]
        fs = [ex.compile_expr(e, "mpfr", prec) for e in fam.branch_exprs]
        x = ex.compile_expr(fam.point_expr, "mpfr", prec)(0, a)
        tol = TOL.breakpoint
        nudge = tol if nudge is None else nudge
        hits = 0
        p = len(fs)
        lo_end, hi_end = pts[0] + tol, pts[-1] - tol
        for j in range(n_steps + 1):
            xf = float(x)
            sink(xf)
            if j == n_steps:
                break
            if j % self.RESET_EVERY == 0:
                ctx.precision = self.precision_for(n_steps - j)
            k = 0
            while k < p - 1 and xf > inner[k]:
                k += 1
            near = xf < lo_end or xf > hi_end or \
                (k > 0 and xf - inner[k - 1] < tol) or \
                (k < p - 1 and inner[k] - xf < tol)
            if near:
                hits += 1
                if hits > 1:
                    return hits, j
                x = x + nudge
                xf = float(x)
                k = 0
                while k < p - 1 and xf > inner[k]:
                    k += 1
            x = fs[k](x, a)
        return hits, None


def _mpq(q):
    import gmpy2

    q = Fraction(q)
    return gmpy2.mpq(q.numerator, q.denominator)
