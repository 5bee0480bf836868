"""Parametrised families ``a -> T_a`` and the orbit of a marked point.

``xi_j(a) = T_a^j(X(a))`` is the orbit of the marked point ``X(a)``. Its
parameter derivative follows the chain rule

    xi_{k+1}' = (d/da T_a)(xi_k) + T_a'(xi_k) * xi_k'

evaluated with exact expression derivatives.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import expr as ex
from .config import TOL
from .errors import (InvalidMap, NonSmoothPoint, OrbitTruncated,
                     RootClusterWarning, SemanticError)
from .maps import PiecewiseMap, REFERENCE
from .orbits import FloatEngine


@dataclass(frozen=True)
class FamilyBounds:
    lam: float
    Lam: float
    L: float
    eta: float
    zeta: float

    @property
    def sup_da(self):
        """``sup |d/da T_a(x)|``; the same quantity as ``eta``."""
        return self.eta

    def as_dict(self):
        return {"lambda": self.lam, "Lambda": self.Lam, "L": self.L,
                "eta": self.eta, "zeta": self.zeta}


BOUND_KEYS = {"lambda": "lam", "Lambda": "Lam", "L": "L", "eta": "eta",
              "zeta": "zeta"}


@dataclass(frozen=True)
class MapFamily:
    """Family on the reference interval ``[-1, 1]``.

    ``breakpoint_exprs`` are the interior breakpoints ``b_1(a) .. b_{p-1}(a)``;
    ``branch_exprs`` are ``f_k(a, x)``; ``point_expr`` is ``X(a)``.
    """

    interval_exact: tuple
    breakpoint_exprs: tuple
    branch_exprs: tuple
    point_expr: ex.Expr
    name: str = "family"
    declared: dict = field(default_factory=dict, compare=False)
    audit: bool = field(default=True, compare=False)

    def __post_init__(self):
        lo, hi = (Fraction(v) for v in self.interval_exact)
        object.__setattr__(self, "interval_exact", (lo, hi))
        if not lo < hi:
            raise SemanticError(f"empty parameter interval [{lo}, {hi}]")
        if len(self.branch_exprs) != len(self.breakpoint_exprs) + 1:
            raise SemanticError(
                f"{len(self.breakpoint_exprs)} interior breakpoints need "
                f"{len(self.breakpoint_exprs) + 1} branches, got "
                f"{len(self.branch_exprs)}")
        bad = [str(b) for b in self.breakpoint_exprs if "x" in ex.free_vars(b)]
        if bad or "x" in ex.free_vars(self.point_expr):
            raise SemanticError("breakpoints and X may only depend on a")
        if self.audit:
            _ = self.bounds

    @property
    def interval(self):
        lo, hi = self.interval_exact
        return (float(lo), float(hi))

    @property
    def p(self):
        return len(self.branch_exprs)

    @functools.cached_property
    def engine(self):
        return FloatEngine(self)

    def verification_grid(self, n=None):
        n = TOL.family_grid if n is None else n
        lo, hi = self.interval
        return np.linspace(lo, hi, n)

    def breakpoints_at(self, a):
        return tuple(float(v) for v in self.engine.breakpoints(a)[0])

    def point(self, a):
        return float(self.engine.point(np.array([a]))[0])

    @functools.cached_property
    def bounds(self):
        return audit_family(self)

    def with_point(self, point_expr, interval=None):
        return replace(self, point_expr=ex.as_expr(point_expr),
                       interval_exact=interval or self.interval_exact)

    def with_interval(self, lo, hi):
        return replace(self, interval_exact=(Fraction(lo), Fraction(hi)))

    def map_exprs(self):
        return list(self.breakpoint_exprs), list(self.branch_exprs)


def _check_parameter(F, a):
    lo, hi = F.interval
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    if not lo - slack <= a <= hi + slack:
        raise ValueError(f"parameter a={a!r} outside I=[{lo}, {hi}]")


def instantiate(F, a, audit=True):
    _check_parameter(F, a)
    pts = F.breakpoints_at(a)
    if any(b1 <= b0 + TOL.breakpoint for b0, b1 in zip(pts, pts[1:])):
        raise InvalidMap(
            f"breakpoints collide or are out of order at a={float(a)!r}: {pts}")
    return PiecewiseMap.from_exprs(pts[1:-1], F.branch_exprs, a=a,
                                   domain=REFERENCE, audit=audit)


def audit_family(F):
    """Grid audit of the family; returns effective bounds.

    Declared bounds (``F.declared``) are used when present, after checking
    that the grid does not contradict them.
    """
    grid = F.verification_grid()
    lam, Lam, L, eta = math.inf, 0.0, 0.0, 0.0
    for a in grid.tolist():
        pts = F.breakpoints_at(a)
        for i, (b0, b1) in enumerate(zip(pts, pts[1:])):
            if b1 <= b0 + TOL.breakpoint:
                raise SemanticError(
                    f"breakpoints b_{i}={b0!r} and b_{i + 1}={b1!r} are out of "
                    f"order at parameter a={a!r}")
        X = F.point(a)
        if not -1.0 <= X <= 1.0:
            raise SemanticError(f"X(a)={X!r} leaves [-1, 1] at a={a!r}")
        try:
            T = instantiate(F, a)
        except InvalidMap as err:
            raise SemanticError(f"invalid map at a={a!r}: {err}") from err
        lam, Lam, L = min(lam, T.bounds.lam), max(Lam, T.bounds.Lam), \
            max(L, T.bounds.L)
        for br in T.branches:
            eta = max(eta, float(np.max(np.abs(br.daf(br.grid())))))
    fine = np.linspace(*F.interval, 257)
    slopes = F.engine.breakpoint_slopes(fine)
    zeta = float(np.max(np.abs(slopes))) if slopes.size else 0.0
    est = FamilyBounds(lam, Lam, L, eta, zeta)
    values = est.as_dict()
    for key, val in F.declared.items():
        if key not in BOUND_KEYS:
            raise SemanticError(f"unknown bound {key!r}")
        seen = values[key]
        rel = 1e-9 * max(1.0, abs(seen))
        if key == "lambda":
            if val > seen + rel:
                raise SemanticError(
                    f"declared lambda={val} exceeds grid minimum {seen}")
        elif val < seen - rel:
            raise SemanticError(f"declared {key}={val} below grid value {seen}")
        values[key] = float(val)
    return FamilyBounds(values["lambda"], values["Lambda"], values["L"],
                        values["eta"], values["zeta"])


# orbit of the marked point --------------------------------------------------

def xi(F, a, j):
    xs, _, _, valid = F.engine.xi(np.array([a], dtype=float), j)
    for i in range(1, j + 1):
        if not valid[i][0]:
            orbit = [float(v[0]) for v in xs[:i]]
            raise OrbitTruncated(i - 1, orbit)
    return float(xs[j][0])


def xi_deriv(F, a, j):
    xs, dxs, _, valid = F.engine.xi(np.array([a], dtype=float), j,
                                    with_deriv=True)
    if not valid[j][0]:
        raise NonSmoothPoint(f"a={a!r} is on a boundary of Q_{j}")
    return float(dxs[j][0])


def itinerary_of_point(F, a, j):
    _, _, itin, valid = F.engine.xi(np.array([a], dtype=float), j)
    if not valid[j][0]:
        raise NonSmoothPoint(f"a={a!r} is on a boundary of Q_{j}")
    return tuple(int(v[0]) + 1 for v in itin)


@dataclass(frozen=True)
class ParamPartition:
    cells: tuple
    itineraries: tuple
    depth: int

    def __len__(self):
        return len(self.cells)

    def locate(self, a):
        for i, (lo, hi) in enumerate(self.cells):
            if lo < a < hi:
                return i
        raise NonSmoothPoint(f"a={a!r} is not interior to a cell of Q_{self.depth}")


def _crossings(F, i, cells, samples):
    """Parameters where ``xi_i`` meets a breakpoint inside each cell."""
    eng = F.engine
    roots = [[] for _ in cells]
    brackets = []
    for c, (lo, hi) in enumerate(cells):
        grid = np.linspace(lo, hi, samples + 2)[1:-1]
        xs, _, _, valid = eng.xi(grid, i)
        B = eng.breakpoints(grid)
        g = xs[i][:, None] - B
        s = np.sign(g)
        change = (s[:-1] * s[1:] < 0) & valid[i][:-1, None] & valid[i][1:, None]
        for r, k in zip(*np.nonzero(change)):
            brackets.append((c, k, grid[r], grid[r + 1]))
    if not brackets:
        return roots
    cid = np.array([b[0] for b in brackets])
    col = np.array([b[1] for b in brackets])
    lo = np.array([b[2] for b in brackets])
    hi = np.array([b[3] for b in brackets])
    rows = np.arange(len(brackets))

    def g(a):
        xs, _, _, _ = eng.xi(a, i)
        return xs[i] - eng.breakpoints(a)[rows, col]

    glo = g(lo)
    steps = max(1, math.ceil(math.log2(max(float(np.max(hi - lo)), 1e-300)
                                       / TOL.inverse_width)))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        same = np.sign(gm) == np.sign(glo)
        lo = np.where(same, mid, lo)
        glo = np.where(same, gm, glo)
        hi = np.where(same, hi, mid)
    for c, r in zip(cid, 0.5 * (lo + hi)):
        roots[c].append(float(r))
    return roots


def param_partition(F, j, samples=None):
    """Maximal parameter intervals on which ``xi_j`` is smooth."""
    samples = TOL.qsplit_samples if samples is None else samples
    cells = [F.interval]
    for i in range(j):
        found = _crossings(F, i, cells, samples)
        new_cells = []
        for (lo, hi), rs in zip(cells, found):
            cuts = []
            for r in sorted(rs):
                if cuts and r - cuts[-1] < TOL.breakpoint:
                    warnings.warn(
                        f"split points {cuts[-1]!r} and {r!r} of Q_{i + 1} are "
                        f"closer than {TOL.breakpoint}; merged",
                        RootClusterWarning, stacklevel=2)
                    continue
                if lo < r < hi:
                    cuts.append(r)
            edges = [lo] + cuts + [hi]
            new_cells.extend(zip(edges[:-1], edges[1:]))
        cells = new_cells
        if len(cells) > TOL.max_cells:
            raise ValueError(f"Q_{i + 1} has more than {TOL.max_cells} cells")
    mids = np.array([0.5 * (lo + hi) for lo, hi in cells])
    _, _, itin, _ = F.engine.xi(mids, j)
    words = tuple(tuple(int(row[c]) + 1 for row in itin) for c in range(len(cells)))
    return ParamPartition(tuple(cells), words, j)


# assumption checkers --------------------------------------------------------

@dataclass
class AssumptionReport:
    assumption: str
    grid: int
    passed: bool
    margin: float
    witnesses: dict = field(default_factory=dict)

    def as_dict(self):
        return {"assumption": self.assumption, "grid": self.grid,
                "pass": bool(self.passed), "margin": _finite(self.margin),
                "witnesses": _jsonable(self.witnesses)}


def _finite(v):
    v = float(v)
    return v if math.isfinite(v) else (None if math.isnan(v) else
                                       ("inf" if v > 0 else "-inf"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _finite(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _midgrid(F, n):
    lo, hi = F.interval
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n


def check_assumption_1(F, j_max=15, grid=257):
    """Envelope of ``|xi_j'(a) / (T_a^j)'(X(a))|`` for ``j <= j_max``.

    Only a finite-``j`` diagnostic: the ratios are reported per ``j`` and the
    envelope is called stable when its endpoints change by less than 1% per
    step over the last half of the ``j`` range.
    """
    a = _midgrid(F, grid) if np.isscalar(grid) else np.asarray(grid, dtype=float)
    xs, dxs, _, valid = F.engine.xi(a, j_max, with_deriv=True)
    prods = F.engine.tangent_product(a, j_max)
    lows, highs = [], []
    for j in range(j_max + 1):
        ok = valid[j]
        r = np.abs(dxs[j][ok] / prods[j][ok])
        lows.append(float(r.min()) if r.size else math.nan)
        highs.append(float(r.max()) if r.size else math.nan)
    tail = range(max(2, j_max // 2 + 1), j_max + 1)
    degenerate = all(h == 0.0 for h in highs[1:])
    stable = not degenerate and all(
        abs(lows[j] - lows[j - 1]) <= 0.01 * lows[j - 1] and
        abs(highs[j] - highs[j - 1]) <= 0.01 * highs[j - 1] for j in tail)
    C0 = max(max(highs[1:] or [0.0]),
             max((1.0 / v if v > 0 else math.inf) for v in lows[1:] or [1.0]))
    return AssumptionReport(
        "1", int(a.size), bool(stable and not degenerate),
        C0,
        {"ratio_min": lows, "ratio_max": highs, "degenerate": degenerate,
         "stable": stable,
         "note": "Assumption 2 implies Assumption 1; see check_assumption_2"})


def check_assumption_2(F, j0, grid=None):
    """``inf_a |xi_j0'(a)| >= sup|d_a T| / (lambda - 1) + 2L`` on a grid.

    The left side is deflated and the right side inflated by the configured
    safety factor. ``j0`` may be an int or an iterable of candidates; the
    first passing candidate is reported (or the last one tried).
    """
    candidates = [j0] if np.isscalar(j0) else list(j0)
    n = TOL.assumption2_grid if grid is None else grid
    a = _midgrid(F, n)
    bounds = F.bounds
    rhs = bounds.sup_da / (bounds.lam - 1.0) + 2.0 * bounds.L
    safety = TOL.assumption2_safety
    report = None
    for j in candidates:
        _, dxs, _, valid = F.engine.xi(a, int(j), with_deriv=True)
        d = np.abs(dxs[int(j)][valid[int(j)]])
        lhs = float(d.min()) if d.size else math.nan
        margin = (1 - safety) * lhs - (1 + safety) * rhs
        report = AssumptionReport(
            "2", n, bool(margin >= 0), margin,
            {"j0": int(j), "inf_abs_xi_deriv": lhs, "rhs": rhs,
             "sup_da_T": bounds.sup_da, "lambda": bounds.lam, "L": bounds.L,
             "skipped_parameters": int(np.sum(~valid[int(j)]))})
        if report.passed:
            break
    return report


def _composed_point(F, word):
    X = F.point_expr
    for k in word:
        X = ex.substitute(F.branch_exprs[k - 1], {"x": X})
    return X


def boost_point(F, j, interval=None, samples=257):
    """Family with marked point ``xi_j`` in place of ``X``.

    ``xi_j`` must be smooth on ``interval`` (default: all of ``I``), i.e. the
    itinerary of ``X(a)`` must not change there.
    """
    if j == 0:
        return F if interval is None else F.with_interval(*interval)
    lo, hi = interval or F.interval_exact
    grid = np.linspace(float(lo), float(hi), samples)
    _, _, itin, valid = F.engine.xi(grid, j)
    if not np.all(valid[j]):
        raise NonSmoothPoint(f"xi_{j} hits a breakpoint on [{lo}, {hi}]")
    rows = np.array(itin)
    if np.any(rows != rows[:, :1]):
        raise NonSmoothPoint(
            f"xi_{j} is not smooth on [{lo}, {hi}]; boost per cell of Q_{j}")
    word = tuple(int(v) + 1 for v in rows[:, 0])
    return replace(F, point_expr=_composed_point(F, word),
                   interval_exact=(Fraction(lo), Fraction(hi)),
                   name=f"{F.name}+boost{j}")


def boost_point_cells(F, j):
    """Apply :func:`boost_point` on every cell of ``Q_j``."""
    Q = param_partition(F, j)
    out = []
    for (lo, hi), word in zip(Q.cells, Q.itineraries):
        out.append(replace(F, point_expr=_composed_point(F, word),
                           interval_exact=(Fraction(lo), Fraction(hi)),
                           name=f"{F.name}+boost{j}"))
    return out


@dataclass
class DensityBoundsReport:
    parameters: list
    minima: list
    maxima: list
    gamma: float
    flagged: list
    gamma_min: float

    @property
    def passed(self):
        return not self.flagged

    def as_dict(self):
        return {"assumption": "3", "grid": len(self.parameters),
                "pass": self.passed, "margin": self.gamma_min - self.gamma,
                "witnesses": {"gamma": self.gamma, "gamma_min": self.gamma_min,
                              "flagged": self.flagged,
                              "min": self.minima, "max": self.maxima}}


def check_density_bounds(F, grid=9, bins=2048, gamma=0.1):
    """Ulam densities on a parameter grid against ``gamma <= phi <= 1/gamma``.

    Parameters violating the bound are flagged rather than fatal, so a
    subset of almost full measure can be retained.
    """
    from .density import stationary_density, ulam_matrix

    params = F.verification_grid(grid) if np.isscalar(grid) else list(grid)
    mins, maxs, flagged = [], [], []
    for a in params:
        d = stationary_density(ulam_matrix(instantiate(F, float(a)), bins))
        lo, hi = d.bounds()
        mins.append(lo)
        maxs.append(hi)
        if lo < gamma or hi > 1.0 / gamma:
            flagged.append(float(a))
    return DensityBoundsReport([float(a) for a in params], mins, maxs, gamma,
                               flagged, float(min(mins)))
