"""Scaled families ``T_a(x) = T(a x)`` and the bundled example families.

A :class:`Template` is a map ``T`` on ``[0, b_n]`` (a finite prefix of the
unbounded breakpoint sequence) with values in ``[0, 1]``. For ``a`` in a
parameter interval ``I``, ``T_a(x) = T(a x)`` on ``[0, 1]`` has breakpoints
``b_i / a``; only template cells starting below ``min(I)`` are used, and
the last of them is cut at ``x = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import numpy as np

from . import expr as ex
from .config import TOL
from .errors import InvalidMap
from .family import MapFamily
from .familyfile import parse_family
from .maps import conjugate_exprs


@dataclass(frozen=True)
class Template:
    """Piecewise monotone ``T`` on ``[b_0, b_n]`` with ``b_0 = 0``.

    ``exprs[i]`` is the branch on ``(b_i, b_{i+1})`` as an expression in
    ``x``.
    """

    breakpoints: tuple
    exprs: tuple
    name: str = "template"

    def __post_init__(self):
        b = tuple(Fraction(v) for v in self.breakpoints)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "exprs", tuple(ex.as_expr(e) for e in self.exprs))
        if b[0] != 0 or any(v <= u for u, v in zip(b, b[1:])):
            raise InvalidMap("template breakpoints must start at 0 and increase")
        if len(self.exprs) != len(b) - 1:
            raise InvalidMap("need one branch per template cell")
        for i in range(len(self.exprs)):
            y = self.values(i, self.grid(i))
            if np.any(y < -1e-12) or np.any(y > 1 + 1e-12):
                raise InvalidMap(f"template branch {i} leaves [0, 1]")

    def grid(self, i, hi=None, n=None):
        n = TOL.deriv_grid if n is None else n
        lo = float(self.breakpoints[i])
        top = float(self.breakpoints[i + 1]) if hi is None else min(
            hi, float(self.breakpoints[i + 1]))
        return np.linspace(lo, top, n)

    def values(self, i, y):
        return ex.compile_expr(self.exprs[i])(y, 0.0)

    def slopes(self, i, y):
        return ex.compile_expr(ex.diff(self.exprs[i], "x"))(y, 0.0)

    @property
    def lam0(self):
        """``inf |T'|`` on the sample grid."""
        return min(float(np.min(np.abs(self.slopes(i, self.grid(i)))))
                   for i in range(len(self.exprs)))

    def image(self, i, hi=None):
        """Closure of ``T((b_i, b_{i+1}) ∩ [0, hi])``."""
        y = self.values(i, self.grid(i, hi, 3))
        return float(np.min(y)), float(np.max(y))


def _used_cells(tpl, I):
    lo, hi = (Fraction(v) for v in I)
    if lo <= 0:
        raise InvalidMap("parameter interval must be positive")
    used = [i for i in range(len(tpl.exprs)) if tpl.breakpoints[i] < lo]
    last = used[-1]
    if tpl.breakpoints[last + 1] < hi:
        raise InvalidMap(
            f"template breakpoint b_{last + 1}={tpl.breakpoints[last + 1]} falls "
            f"inside a*[0, 1] for a in [{lo}, {hi}]; its preimage b/a would "
            "enter or leave [0, 1] within I")
    return used


def build_scaled_family(tpl, I, point=Fraction(1, 2), name=None):
    """The family ``T_a(x) = T(a x)`` on ``[0, 1]``, conjugated to ``[-1, 1]``.

    ``point`` is ``X(a)`` in the coordinates of ``[0, 1]`` (a number or an
    expression in ``a``).
    """
    used = _used_cells(tpl, I)
    ax = ex.A * ex.X
    bps = [ex.Num(tpl.breakpoints[i]) / ex.A for i in used[1:]]
    brs = [ex.substitute(tpl.exprs[i], {"x": ax}) for i in used]
    bps, brs = conjugate_exprs(bps, brs, ex.ZERO, ex.ONE)
    X = 2 * ex.as_expr(point) - 1
    return MapFamily(tuple(Fraction(v) for v in I), tuple(bps), tuple(brs), X,
                     name=name or f"{tpl.name}/scaled")


@dataclass
class CorollaryReport:
    delta: float
    interval: tuple
    a0: float
    passed: bool
    witness: int | None
    precondition: bool
    large_images: bool
    inf_derivative: float
    required_inf_derivative: float
    margin: float
    failures: list = field(default_factory=list)

    def as_dict(self):
        return {"pass": self.passed, "witness": self.witness, "delta": self.delta,
                "interval": list(self.interval), "a0": self.a0,
                "precondition": self.precondition,
                "large_images": self.large_images,
                "inf_derivative": self.inf_derivative,
                "required_inf_derivative": self.required_inf_derivative,
                "margin": self.margin, "failures": self.failures}


def corollary_check(tpl, delta, I, grid=None):
    """Check the scaled-family hypotheses with window ``((1-d)/2, (1+d)/2)``.

    * ``I`` lies in ``[a0, inf)`` with ``a0 = (1 + 1/delta) / lam0``;
    * every used branch image contains the window, for every ``a`` on the
      grid (the last branch cut at ``x = 1``);
    * some full branch ``i`` has ``(b_i/a, b_{i+1}/a)`` inside the window
      for all ``a`` in ``I``; ``witness`` is that ``i`` (cells numbered
      from 0, as ``(b_i, b_{i+1})``).

    ``margin`` is ``inf |T_a'| - (1 + 1/delta)``, the slack in the
    large-image inequality with ``m = 1``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    delta = float(delta)
    lo, hi = float(I[0]), float(I[1])
    lam0 = tpl.lam0
    a0 = (1 + 1 / delta) / lam0
    required = 1 + 1 / delta
    inf_d = lo * lam0
    margin = inf_d - required
    w_lo, w_hi = (1 - delta) / 2, (1 + delta) / 2
    failures = []
    precondition = lo >= a0 - 1e-12
    if not precondition:
        failures.append({"check": "precondition", "a0": a0, "I": [lo, hi]})
    used = _used_cells(tpl, I)
    grid = np.linspace(lo, hi, TOL.family_grid) if grid is None else grid
    large = True
    for a in grid:
        for i in used:
            ilo, ihi = tpl.image(i, hi=float(a))
            if ilo > w_lo + TOL.containment or ihi < w_hi - TOL.containment:
                large = False
                failures.append({"check": "large_image", "a": float(a), "cell": i,
                                 "image": [ilo, ihi]})
    witness = None
    for i in used:
        if i + 1 >= len(tpl.breakpoints):
            continue
        ilo, ihi = tpl.image(i)
        full = ilo <= TOL.case_band and ihi >= 1 - TOL.case_band
        b0, b1 = float(tpl.breakpoints[i]), float(tpl.breakpoints[i + 1])
        inside = b0 / hi >= w_lo and b1 / lo <= w_hi
        if full and inside:
            witness = i
            break
    if witness is None:
        failures.append({"check": "witness", "window": [w_lo, w_hi]})
    passed = precondition and large and witness is not None and margin > 0
    return CorollaryReport(float(delta), (lo, hi), a0, passed, witness,
                           precondition, large, inf_d, required, margin, failures)


# bundled examples -----------------------------------------------------------

EXAMPLES = {
    "doubling": "doubling map, constant in a, X(a) = a",
    "tripling": "three full slope-3 branches, constant in a",
    "negative_control": "slope-2 map with an invariant subinterval",
    "lambda4": "slope-4 family with interior and touching branches",
    "figure1": "scaled template family with delta = 2/5",
}

FIGURE1_DELTA = Fraction(2, 5)
FIGURE1_INTERVAL = (Fraction(1), Fraction(26, 25))


def figure1_template():
    """Slope-4 template whose middle cell ``(0.4, 0.65)`` maps onto [0, 1]."""
    b = [Fraction(v) for v in ("0", "0.15", "0.4", "0.65", "0.8", "1.05")]
    x = ex.X
    exprs = [4 * x + Fraction(1, 5), 4 * (x - b[1]), 4 * (x - b[2]),
             4 * (x - b[3]) + Fraction(1, 5), 4 * (x - b[4])]
    return Template(tuple(b), tuple(exprs), name="figure1")


def example_text(name):
    if name not in EXAMPLES:
        raise KeyError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}")
    path = resources.files("pwexpand") / "data" / f"{name}.json"
    return path.read_text(encoding="utf-8")


def load_example(name, audit=True):
    return parse_family(example_text(name), source=f"{name}.json", audit=audit)
