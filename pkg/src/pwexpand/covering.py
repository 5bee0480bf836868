"""Weak covering through the restricted image iteration, and large images.

``tilde_image`` pushes forward only those partition cells that lie entirely
inside the current set. Iterating it from a branch cell and accumulating the
results gives the restricted orbit whose complement must shrink to a finite
set (operationalized by two length thresholds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import TOL
from .errors import NotCoveringWithin
from .intervals import IntervalUnion
from .maps import PiecewiseMap, cell_images, refine_partition


def _as_union(U):
    if isinstance(U, IntervalUnion):
        return U
    if len(U) == 2 and np.isscalar(U[0]):
        return IntervalUnion.from_intervals([U])
    return IntervalUnion.from_intervals(U)


def tilde_image(T, U):
    """Union of ``T(w)`` over branch cells ``w`` contained in ``U``."""
    U = _as_union(U)
    pieces = [br.image for br in T.branches
              if U.contains_interval(br.left, br.right, TOL.containment)]
    return IntervalUnion.from_intervals(pieces)


def image(T, U):
    """Ordinary forward image ``T(U)`` of an interval union."""
    U = _as_union(U)
    pieces = []
    for br in T.branches:
        for lo, hi in U.intersect_interval(br.left, br.right):
            y = br.f(np.array([lo, hi]))
            pieces.append((float(y.min()), float(y.max())))
    return IntervalUnion.from_intervals(pieces)


def tilde_chain(T, cell, n):
    """``[w, T~(w), T~^2(w), ..., T~^n(w)]`` for a branch cell ``w``."""
    w = _as_union(cell)
    chain = [w]
    if n >= 1:
        chain.append(image(T, w))
    for _ in range(2, n + 1):
        chain.append(tilde_image(T, chain[-1]))
    return chain


def _finite_complement(A, domain, n, p):
    rest = A.complement(*domain)
    small = all(hi - lo < TOL.residual_piece for lo, hi in rest)
    ok = rest.length < TOL.residual_length and small and len(rest) <= p * (n + 1)
    return ok, rest.length


def weakly_covering_N(T, cell, N_max=50):
    """Smallest ``N`` with ``domain \\ U_{n<=N} T~^n(cell)`` finite."""
    current = _as_union(cell)
    acc = current
    ok, residual = _finite_complement(acc, T.domain, 0, T.p)
    if ok:
        return 0
    for n in range(1, N_max + 1):
        nxt = image(T, current) if n == 1 else tilde_image(T, current)
        new_acc = acc | nxt
        ok, residual = _finite_complement(new_acc, T.domain, n, T.p)
        if ok:
            return n
        if nxt == current and new_acc == acc:
            break
        current, acc = nxt, new_acc
    raise NotCoveringWithin(N_max, residual)


@dataclass
class CoveringReport:
    records: list = field(default_factory=list)

    @property
    def per_cell(self):
        return [r["N"] for r in self.records]

    @property
    def max_N(self):
        return max(self.per_cell)

    def as_dict(self):
        return {"assumption": "5", "grid": 1, "pass": True, "margin": None,
                "witnesses": {"max_N": self.max_N, "cells": self.records}}


def check_assumption_5(T, N_max=50):
    """Run :func:`weakly_covering_N` on every branch cell."""
    report = CoveringReport()
    for br in T.branches:
        cell = (br.left, br.right)
        N = weakly_covering_N(T, cell, N_max)
        chain = tilde_chain(T, cell, N)
        acc = IntervalUnion.empty()
        for piece in chain:
            acc = acc | piece
        report.records.append({"cell": list(cell), "N": N,
                               "residual_length": acc.complement(*T.domain).length})
    return report


@dataclass
class LargeImageReport:
    m: int
    delta: float
    passed: bool
    containment_margin: float
    inequality_margin: float
    inf_derivative: float
    required_inf_derivative: float
    failures: list = field(default_factory=list)

    def as_dict(self):
        return {"assumption": "6", "grid": None, "pass": self.passed,
                "margin": min(self.containment_margin, self.inequality_margin),
                "witnesses": {
                    "m": self.m, "delta": self.delta,
                    "containment_margin": self.containment_margin,
                    "inequality_margin": self.inequality_margin,
                    "inf_derivative": self.inf_derivative,
                    "required_inf_derivative": self.required_inf_derivative,
                    "failures": self.failures[:20]}}


def _derivative_products(T, P):
    """Per-cell lower estimate of ``|(T^m)'|``: product along the word of the
    branch-wise grid minima of ``|f'|``; the smallest over all cells."""
    lam_k = np.array([float(np.min(np.abs(br.df(br.grid())))) for br in T.branches])
    prods = np.prod(lam_k[P.words.astype(np.int64) - 1], axis=1)
    return float(prods.min())


def check_assumption_6(F, m, delta, grid=None):
    """Images of ``P_m`` cells contain ``(-delta, delta)`` and
    ``delta > 1 / (inf |(T^m)'| - 1)``, for every parameter in the grid.

    ``F`` may be a family or a single :class:`PiecewiseMap`.
    """
    from .family import instantiate

    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if isinstance(F, PiecewiseMap):
        maps = [F]
    else:
        params = F.verification_grid() if grid is None else grid
        maps = [instantiate(F, float(a)) for a in np.atleast_1d(params)]
    cont_margin, inf_d = math.inf, math.inf
    failures = []
    for T in maps:
        P = refine_partition(T, m)
        ilo, ihi = cell_images(T, P)
        slack = TOL.containment
        margins = np.minimum(-delta - ilo, ihi - delta) + slack
        worst = int(np.argmin(margins))
        cont_margin = min(cont_margin, float(margins[worst]))
        if margins[worst] < 0:
            failures.append({"a": T.a, "cell": list(P.cells[worst]),
                             "image": [float(ilo[worst]), float(ihi[worst])]})
        inf_d = min(inf_d, _derivative_products(T, P))
    ineq = delta - 1.0 / (inf_d - 1.0) if inf_d > 1 else -math.inf
    return LargeImageReport(m, delta, bool(cont_margin >= 0 and ineq > 0),
                            cont_margin, ineq, inf_d, 1.0 + 1.0 / delta, failures)
