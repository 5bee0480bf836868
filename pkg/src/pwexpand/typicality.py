"""Birkhoff frequencies of the marked orbit and parameter sweeps.

For a parameter ``a`` the orbit ``xi_j(a)`` is histogrammed on the bins of
the Ulam density of ``T_a`` and the two distributions are compared in the
Kolmogorov-Smirnov distance. A parameter counts as typical when that
distance falls below a threshold.

Orbits are computed in float64, all parameters of a sweep at once. An orbit
that hits a breakpoint twice is recomputed with the exact engine; maps with
dyadic affine branches need this, since their float orbits are bit shifts
that die on a breakpoint after about 53 steps.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import expr as ex
from .config import TOL
from .density import stationary_density, ulam_matrix
from .errors import NonConvergence, NotCoveringWithin, PWExpandError
from .orbits import ExactEngine, golden_offset

DEFAULT_THRESHOLD = 0.02
UNRELIABLE_DENSITY = 1e-6


# orbit sampling ---------------------------------------------------------------

def grid_floats(F, k):
    """Golden-offset grid ``lo + (hi - lo)(i + u)/k``, ``i = 0..k-1``."""
    lo, hi = F.interval
    return lo + (hi - lo) * (np.arange(k) + golden_offset()) / k


def _float_orbits(F, a, n, burn_in, edges, chunk=512):
    """Histogram ``xi_{burn_in+1} .. xi_{burn_in+n}`` for many parameters.

    Returns ``(counts, truncated)``; ``truncated[i]`` is the first step of a
    second breakpoint hit, or -1.
    """
    eng = F.engine
    a = np.asarray(a, dtype=float)
    k, bins = a.size, len(edges) - 1
    B = eng.breakpoints(a)
    inner = B[:, 1:-1]
    fs = [f.raw for f in eng._f]
    x = eng.point(a) * np.ones(k)
    lo, h = edges[0], edges[1] - edges[0]
    counts = np.zeros(k * bins, dtype=np.int64)
    hits = np.zeros(k, dtype=np.int64)
    truncated = np.full(k, -1, dtype=np.int64)
    alive = np.ones(k, bool)
    offsets = np.arange(k) * bins
    buf = np.empty((chunk, k), dtype=np.int64)
    fill = 0
    tol = TOL.breakpoint
    parked = 0.5 * (B[:, 0] + B[:, 1])
    zeros = np.zeros(k)

    def flush(rows):
        keep = rows[rows >= 0]
        counts[:] += np.bincount(keep, minlength=k * bins)

    for j in range(burn_in + n):
        dist = np.min(np.abs(x[:, None] - B), axis=1)
        hit = (dist < tol) | (x <= B[:, 0]) | (x >= B[:, -1])
        hit &= alive
        if hit.any():
            hits[hit] += 1
            dead = hit & (hits > 1)
            truncated[dead] = j
            alive &= ~dead
            x = np.where(hit & alive, x + tol, x)
            if not alive.any():
                break
        xc = np.where(alive, x, parked)
        idx = np.sum(xc[:, None] > inner, axis=1)
        x = np.choose(idx, [f(xc, a) + zeros for f in fs])
        if j >= burn_in:
            b = np.clip(((x - lo) / h).astype(np.int64), 0, bins - 1) + offsets
            buf[fill] = np.where(alive, b, -1)
            fill += 1
            if fill == chunk:
                flush(buf.ravel())
                fill = 0
    flush(buf[:fill].ravel())
    return counts.reshape(k, bins), truncated


def _exact_orbit(F, a_exact, n, burn_in, edges):
    """Exact-engine histogram of one orbit; ``a_exact`` is an mpfr."""
    eng = ExactEngine(F)
    buf = np.empty(burn_in + n + 1)
    pos = [0]

    def sink(v):
        buf[pos[0]] = v
        pos[0] += 1

    _, trunc = eng.orbit(a_exact, burn_in + n, sink)
    xs = buf[burn_in + 1:pos[0]]
    bins = len(edges) - 1
    lo, h = edges[0], edges[1] - edges[0]
    b = np.clip(((xs - lo) / h).astype(np.int64), 0, bins - 1)
    return np.bincount(b, minlength=bins), (-1 if trunc is None else trunc)


def _exact_parameter(F, a, i=None, k=None, n_steps=0):
    import gmpy2

    eng = ExactEngine(F)
    prec = eng.precision_for(n_steps)
    if i is not None:
        return eng.grid_parameter(i, k, prec)
    ctx = gmpy2.get_context()
    ctx.precision = prec
    if isinstance(a, Fraction):
        return gmpy2.mpfr(gmpy2.mpq(a.numerator, a.denominator))
    return gmpy2.mpfr(a)


def orbit_points(F, a, n, burn_in=0, engine="float"):
    """``xi_{burn_in+1} .. xi_{burn_in+n}`` as an array.

    ``engine`` is ``"float"``, ``"exact"`` or ``"auto"`` (float, rerun
    exactly on truncation). With ``"exact"`` the parameter may be a float, a
    Fraction or a gmpy2 mpfr; a float is taken at face value, i.e. as a
    dyadic rational, whose orbit under a dyadic map still ends on a
    breakpoint. The array is shorter than ``n`` when the orbit was truncated.
    """
    if engine == "auto":
        xs = orbit_points(F, a, n, burn_in, "float")
        return xs if len(xs) == n else orbit_points(F, a, n, burn_in, "exact")
    if engine == "exact":
        eng = ExactEngine(F)
        out = []
        a_x = a if type(a).__name__ == "mpfr" else _exact_parameter(
            F, a, n_steps=burn_in + n)
        eng.orbit(a_x, burn_in + n, out.append)
        return np.asarray(out[burn_in + 1:])
    if engine != "float":
        raise ValueError(f"unknown engine {engine!r}")
    a = float(a)
    pts = F.breakpoints_at(a)
    inner = pts[1:-1]
    fs = [ex.compile_expr(f, "float") for f in F.branch_exprs]
    x = F.point(a)
    tol, lo_end, hi_end, p = TOL.breakpoint, pts[0], pts[-1], len(fs)
    out = np.empty(n)
    hits = 0
    for j in range(burn_in + n):
        for attempt in range(2):
            k = 0
            while k < p - 1 and x > inner[k]:
                k += 1
            near = x - lo_end < tol or hi_end - x < tol or \
                (k > 0 and x - inner[k - 1] < tol) or \
                (k < p - 1 and inner[k] - x < tol)
            if not near or attempt:
                break
            hits += 1
            if hits > 1:
                return out[:max(0, j - burn_in)]
            x += tol
        x = fs[k](x, a)
        if j >= burn_in:
            out[j - burn_in] = x
    return out


# statistics -------------------------------------------------------------------

@dataclass
class OrbitStatistics:
    """Histogram of one orbit; ``counts`` sum to the number of kept iterates."""

    a: float
    n: int
    edges: np.ndarray
    counts: np.ndarray
    truncated: int = -1
    engine: str = "float"
    ks: float | None = None

    @property
    def kept(self):
        return int(self.counts.sum())

    @property
    def mass(self):
        return self.kept / self.n

    def frequency(self, lo, hi):
        """``F_n`` of ``(lo, hi)`` at bin resolution (partial bins pro rata)."""
        left = np.clip(self.edges[:-1], lo, hi)
        right = np.clip(self.edges[1:], lo, hi)
        frac = (right - left) / np.diff(self.edges)
        return float(np.sum(self.counts * frac) / self.n)


def empirical_cdf(counts):
    c = np.cumsum(np.asarray(counts, dtype=float))
    return c / c[-1] if c[-1] > 0 else c


def ks_distance(hist, d, edges=None):
    """Sup distance between the histogram CDF and the density CDF.

    ``hist`` is an :class:`OrbitStatistics` or a count vector on ``edges``
    (default: the density's own bins). Both CDFs are compared at the
    histogram edges, where the density CDF is exact.
    """
    if isinstance(hist, OrbitStatistics):
        counts, edges = hist.counts, hist.edges
    else:
        counts = np.asarray(hist)
        edges = d.edges if edges is None else np.asarray(edges)
    if len(edges) != len(counts) + 1:
        raise ValueError("histogram and edges do not match")
    if abs(edges[0] - d.edges[0]) > 1e-12 or abs(edges[-1] - d.edges[-1]) > 1e-12:
        raise ValueError("histogram and density live on different domains")
    ref = np.interp(edges[1:], d.edges, np.concatenate(([0.0], d.cdf())))
    return float(np.max(np.abs(empirical_cdf(counts) - ref)))


def birkhoff_F(F, a, B, n, engine="auto", return_flag=False):
    """``(1/n) #{1 <= j <= n : xi_j(a) in B}`` for an open interval ``B``.

    A truncated orbit contributes only its computed iterates (the value is
    still divided by ``n``); pass ``return_flag=True`` to also get the
    truncation flag.
    """
    if n < 1:
        raise ValueError("n must be positive")
    lo, hi = B
    xs = orbit_points(F, a, n, engine=engine)
    value = float(np.count_nonzero((xs > lo) & (xs < hi))) / n
    if return_flag:
        return value, len(xs) < n
    return value


# sweeps -----------------------------------------------------------------------

def _map_is_constant(F):
    names = set()
    for e in (*F.breakpoint_exprs, *F.branch_exprs):
        names |= ex.free_vars(e)
    return "a" not in names


def reference_density(F, a, bins):
    from .family import instantiate

    return stationary_density(ulam_matrix(instantiate(F, float(a), audit=False), bins))


def _preconditions(F, delta=None, m=1):
    from .covering import check_assumption_5, check_assumption_6
    from .family import instantiate

    notes = {}
    mid = float(np.mean(F.interval))
    try:
        notes["assumption_5_max_N"] = check_assumption_5(instantiate(F, mid)).max_N
    except NotCoveringWithin as err:
        notes["assumption_5"] = f"failed at a={mid}: {err}"
        warnings.warn(f"weak covering fails at a={mid}; densities may be unreliable")
    if delta is not None:
        rep = check_assumption_6(F, m, delta)
        notes["assumption_6_pass"] = rep.passed
        if not rep.passed:
            warnings.warn("large-image check fails; proceeding anyway")
    return notes


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    threshold: float = DEFAULT_THRESHOLD
    n: int = 0
    bins: int = 0
    burn_in: int = 0
    preconditions: dict = field(default_factory=dict)

    @property
    def ks(self):
        return np.array([r["ks"] if r["ks"] is not None else np.nan for r in self.rows])

    @property
    def fraction_below(self):
        ks = self.ks
        return float(np.mean(np.nan_to_num(ks, nan=np.inf) < self.threshold))

    def summary(self):
        ks = self.ks
        good = ks[np.isfinite(ks)]
        flags = {}
        for r in self.rows:
            for f in r["flags"]:
                name = f.split("@")[0]
                flags[name] = flags.get(name, 0) + 1
        return {"parameters": len(self.rows), "n": self.n, "bins": self.bins,
                "burn_in": self.burn_in, "threshold": self.threshold,
                "fraction_below": self.fraction_below,
                "median_ks": float(np.median(good)) if good.size else None,
                "max_ks": float(np.max(good)) if good.size else None,
                "flags": flags, "preconditions": self.preconditions}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a", "ks", "min_density", "max_density", "flags"])
        for r in self.rows:
            w.writerow([repr(r["a"]), _fmt(r["ks"]), _fmt(r["min_density"]),
                        _fmt(r["max_density"]), ";".join(r["flags"])])
        return buf.getvalue()

    def to_json(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _fmt(v):
    return "" if v is None else f"{v:.10g}"


def sweep(F, params=200, n=200_000, bins=4096, threshold=DEFAULT_THRESHOLD,
          burn_in=None, exact_fallback=True, check=True, delta=None):
    """KS distance between orbit and Ulam density over a parameter grid.

    Parameters
    ----------
    F : MapFamily
    params : int or array_like
        An integer ``k`` selects the golden-offset grid of ``k`` points
        (exact fallback then uses the irrational grid values); an array is
        used as given.
    n, bins : int
        Orbit length kept after burn-in, and bin count for both the
        histogram and the Ulam density.
    burn_in : int, optional
        Discarded iterates, ``isqrt(n)`` by default.
    """
    burn_in = math.isqrt(n) if burn_in is None else burn_in
    on_grid = np.isscalar(params)
    a = grid_floats(F, int(params)) if on_grid else np.asarray(params, float)
    k = a.size
    pre = _preconditions(F, delta) if check else {}
    edges = np.linspace(-1.0, 1.0, bins + 1)
    counts, trunc = _float_orbits(F, a, n, burn_in, edges)
    engines = ["float"] * k
    if exact_fallback:
        for i in np.flatnonzero(trunc >= 0):
            a_x = (_exact_parameter(F, None, int(i), k, burn_in + n) if on_grid
                   else _exact_parameter(F, float(a[i]), n_steps=burn_in + n))
            counts[i], trunc[i] = _exact_orbit(F, a_x, n, burn_in, edges)
            engines[i] = "exact"
    shared = None
    rows = []
    for i in range(k):
        flags = [] if engines[i] == "float" else ["exact"]
        if trunc[i] >= 0:
            flags.append(f"truncated@{int(trunc[i])}")
        try:
            if _map_is_constant(F):
                shared = shared or reference_density(F, a[i], bins)
                d = shared
            else:
                d = reference_density(F, a[i], bins)
        except (NonConvergence, PWExpandError) as err:
            flags.append("density_failed")
            rows.append({"a": float(a[i]), "ks": None, "min_density": None,
                         "max_density": None, "flags": flags,
                         "error": type(err).__name__})
            continue
        lo_d, hi_d = d.bounds()
        if lo_d < UNRELIABLE_DENSITY:
            flags.append("reference_unreliable")
        ks = ks_distance(counts[i], d, edges) if counts[i].sum() else None
        if ks is None:
            flags.append("empty_orbit")
        rows.append({"a": float(a[i]), "ks": ks, "min_density": lo_d,
                     "max_density": hi_d, "flags": flags})
    return SweepReport(rows, threshold, n, bins, burn_in, pre)


def orbit_statistics(F, a, n, bins=4096, burn_in=None, engine="auto"):
    """Histogram and KS distance for a single parameter."""
    burn_in = math.isqrt(n) if burn_in is None else burn_in
    edges = np.linspace(-1.0, 1.0, bins + 1)
    xs = orbit_points(F, a, n, burn_in, engine)
    b = np.clip(((xs + 1.0) / (edges[1] - edges[0])).astype(np.int64), 0, bins - 1)
    st = OrbitStatistics(float(a), n, edges, np.bincount(b, minlength=bins),
                         truncated=-1 if len(xs) == n else burn_in + len(xs),
                         engine=engine)
    st.ks = ks_distance(st, reference_density(F, float(a), bins)) if len(xs) else None
    return st


def limsup_bound_check(F, a, B_list, n_list, C=None, slack=0.01, engine="auto",
                       bins=2048):
    """Record ``F_n(a; B)`` and test ``F_n <= C |B| + slack``.

    ``C`` defaults to ``1/gamma`` with ``gamma`` the minimum of the Ulam
    density at ``a``.
    """
    if C is None:
        gamma = reference_density(F, float(a), bins).bounds()[0]
        C = 1.0 / gamma if gamma > 0 else math.inf
    xs_all = orbit_points(F, a, max(n_list), engine=engine)
    records = []
    for lo, hi in B_list:
        for n in n_list:
            xs = xs_all[:n]
            Fn = float(np.count_nonzero((xs > lo) & (xs < hi))) / n
            bound = C * (hi - lo) + slack
            records.append({"B": [lo, hi], "n": n, "F": Fn, "bound": bound,
                            "ratio": Fn / (hi - lo) if hi > lo else None,
                            "pass": Fn <= bound})
    return {"a": float(a), "C": C, "slack": slack,
            "pass": all(r["pass"] for r in records), "records": records}
