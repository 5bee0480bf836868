"""The branchwise expansion operator ``E_s`` and the perturbed families.

Each branch is rescaled affinely in its values, with the rule chosen by
which ends of ``[-1, 1]`` the closure of its image touches:

==============  =======================================
case            expanded branch
==============  =======================================
``interior``    ``s * f``
``full``        ``f`` (image is all of ``(-1, 1)``)
``touches-1``   ``(s + 1)/2 * f + (s - 1)/2``
``touches+1``   ``(s + 1)/2 * f - (s - 1)/2``
==============  =======================================

so the image grows with ``s`` while an endpoint sitting at -1 or +1 stays
there.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import expr as ex
from .config import TOL
from .errors import Infeasible, InvalidMap, ScaleTooLarge
from .maps import Branch, PiecewiseMap, REFERENCE

INTERIOR, FULL, TOUCH_LO, TOUCH_HI = "interior", "full", "touches-1", "touches+1"
CASES = (INTERIOR, FULL, TOUCH_LO, TOUCH_HI)


def classify(image, band=None):
    band = TOL.case_band if band is None else band
    lo, hi = image
    at_lo, at_hi = lo <= -1.0 + band, hi >= 1.0 - band
    if at_lo and at_hi:
        return FULL
    if at_lo:
        return TOUCH_LO
    if at_hi:
        return TOUCH_HI
    return INTERIOR


def expanded_expr(f, case, s):
    """Expression of ``E_s f``; ``s`` may be a number or an expression in a."""
    s = ex.as_expr(s)
    if case == INTERIOR:
        return s * f
    if case == FULL:
        return f
    half_up = (s + 1) / 2
    half_down = (s - 1) / 2
    if case == TOUCH_LO:
        return half_up * f + half_down
    if case == TOUCH_HI:
        return half_up * f - half_down
    raise ValueError(f"unknown case {case!r}")


def expanded_image(image, case, s):
    lo, hi = image
    if case == INTERIOR:
        return s * lo, s * hi
    if case == FULL:
        return lo, hi
    c, d = (s + 1) / 2, (s - 1) / 2
    if case == TOUCH_LO:
        return c * lo + d, c * hi + d
    return c * lo - d, c * hi - d


def slope_factor(case, s):
    """``|(E_s f)'| / |f'|`` for the given case."""
    if case == INTERIOR:
        return s
    if case == FULL:
        return 1.0
    return (s + 1) / 2


def _check_reference(T):
    if tuple(T.domain) != REFERENCE:
        raise ValueError("E_s is defined for maps on [-1, 1]; conjugate first")


@dataclass(frozen=True)
class ExpandedBranch:
    source: Branch
    case: str
    s: float
    branch: Branch

    @property
    def image(self):
        return self.branch.image


def branch_scale_limit(image, case, ceiling=None):
    """Largest ``s`` keeping the expanded image inside ``[-1, 1]``."""
    ceiling = TOL.scale_ceiling if ceiling is None else ceiling
    lo, hi = image
    if case == FULL:
        return ceiling
    if case == INTERIOR:
        m = max(abs(lo), abs(hi))
        return min(ceiling, 1.0 / m) if m > 0 else ceiling
    if case == TOUCH_LO:
        return min(ceiling, (3.0 - hi) / (1.0 + hi)) if hi > -1 else ceiling
    return min(ceiling, (3.0 + lo) / (1.0 - lo)) if lo < 1 else ceiling


def expand_branch(br, s):
    if s < 1:
        raise ValueError("E_s is only used for s >= 1")
    case = classify(br.image)
    limit = branch_scale_limit(br.image, case)
    if s > limit * (1 + 1e-12):
        raise ScaleTooLarge(
            f"s={s} pushes the image of the {case} branch on "
            f"({br.left}, {br.right}) outside [-1, 1] (limit {limit:.12g})")
    new = Branch(br.left, br.right, expanded_expr(br.expr, case, s), br.a,
                 br.increasing, case)
    return ExpandedBranch(br, case, float(s), new)


def expand_map(T, s):
    """``E_s T``: every branch expanded, breakpoints untouched."""
    _check_reference(T)
    exp = [expand_branch(br, s) for br in T.branches]
    return PiecewiseMap.from_exprs(
        T.breakpoints[1:-1], [e.branch.expr for e in exp], a=T.a,
        audit=T.bounds is not None, cases=[e.case for e in exp])


def max_scale(T, ceiling=None):
    """``s_0``: the largest ``s`` for which ``E_s T`` still maps into [-1, 1]."""
    _check_reference(T)
    return min(branch_scale_limit(br.image, classify(br.image), ceiling)
               for br in T.branches)


def image_window(T):
    """Largest ``delta`` with ``(-delta, delta)`` inside every branch image."""
    return min(min(-br.image[0], br.image[1]) for br in T.branches)


@dataclass(frozen=True)
class PerturbationConstants:
    lam: float
    Lam: float
    eta: float
    zeta: float
    delta: float
    eps: float | None
    alpha0: float
    s0: float | None = None

    def K(self, alpha, eps=None):
        eps = self.eps if eps is None else eps
        eps = 0.0 if eps is None else eps
        return (alpha + (1 + alpha * eps) * self.eta) / (self.lam - 1)

    def window(self, alpha, s0=None):
        """``eps_max = min(1, s0 - 1) / alpha``."""
        s0 = self.s0 if s0 is None else s0
        if s0 is None:
            raise ValueError("s0 is needed for the parameter window")
        return min(1.0, s0 - 1.0) / alpha

    def endpoint_speed_gap(self, alpha, eps):
        """``alpha (delta - 1/(lam-1)) - (1 + alpha eps)(lam eta/(lam-1) + Lam zeta)``."""
        return alpha * (self.delta - 1 / (self.lam - 1)) - (1 + alpha * eps) * (
            self.lam * self.eta / (self.lam - 1) + self.Lam * self.zeta)

    def as_dict(self):
        out = {"lambda": self.lam, "Lambda": self.Lam, "eta": self.eta,
               "zeta": self.zeta, "delta": self.delta, "alpha0": self.alpha0}
        if self.s0 is not None:
            out["s0"] = self.s0
        return out


def compute_constants(lam, Lam, eta, zeta, delta, eps=None, s0=None):
    """Threshold ``alpha0`` for the nested-subshift property.

    Uses ``1 + alpha*eps <= 2`` (valid while ``alpha*eps <= 1``), giving
    ``alpha0 = 2 (lam eta/(lam-1) + Lam zeta) / (delta - 1/(lam-1))``.
    """
    if lam <= 1:
        raise Infeasible(f"lambda={lam} is not expanding")
    threshold = 1.0 / (lam - 1.0)
    if delta <= threshold:
        raise Infeasible(
            f"delta={delta} does not exceed 1/(lambda-1)={threshold:.6g}")
    alpha0 = 2.0 * (lam * eta / (lam - 1.0) + Lam * zeta) / (delta - threshold)
    return PerturbationConstants(float(lam), float(Lam), float(eta), float(zeta),
                                 float(delta), eps, alpha0, s0)


# perturbed families ----------------------------------------------------------

def family_cases(F, lo=None, hi=None, n=None):
    """Case tag per branch, checked constant over a parameter grid."""
    from .family import instantiate

    lo = F.interval[0] if lo is None else lo
    hi = F.interval[1] if hi is None else hi
    n = TOL.family_grid if n is None else n
    tags = None
    for a in np.linspace(lo, hi, n):
        T = instantiate(F, float(a))
        now = [classify(br.image) for br in T.branches]
        if tags is None:
            tags = now
        elif now != tags:
            k = next(i for i, (u, v) in enumerate(zip(tags, now)) if u != v)
            raise InvalidMap(
                f"branch {k + 1} changes case from {tags[k]} to {now[k]} at a={a}; "
                "touching endpoints must stay fixed in the parameter")
    return tags


def family_constants(F, lo=None, hi=None, n=None):
    """Constants for ``F`` with ``delta`` and ``s0`` read off a grid."""
    from .family import instantiate

    lo = F.interval[0] if lo is None else lo
    hi = F.interval[1] if hi is None else hi
    n = TOL.family_grid if n is None else n
    maps = [instantiate(F, float(a)) for a in np.linspace(lo, hi, n)]
    delta = min(image_window(T) for T in maps)
    s0 = min(max_scale(T) for T in maps)
    b = F.bounds
    return compute_constants(b.lam, b.Lam, b.eta, b.zeta, delta, s0=s0)


@dataclass(frozen=True)
class PerturbedFamily:
    family: object
    base: object
    a0: float
    alpha: float
    constants: PerturbationConstants
    window: float
    cases: tuple

    def scale(self, a):
        return 1.0 + (a - self.a0) * self.alpha


def perturbed_family(F, a0, alpha=None, window=None):
    """``a -> E_{1 + (a - a0) alpha} T_a`` on ``[a0, a0 + eps_max]``.

    ``alpha`` defaults to twice the threshold. ``window`` may shrink the
    parameter range below ``eps_max``.
    """
    lo, hi = F.interval
    if not lo <= a0 < hi:
        raise ValueError(f"a0={a0} must lie in [{lo}, {hi})")
    consts = family_constants(F, a0, hi)
    if alpha is None:
        alpha = 2.0 * consts.alpha0 if consts.alpha0 > 0 else 1.0
    if alpha < consts.alpha0:
        raise Infeasible(f"alpha={alpha} is below alpha0={consts.alpha0:.6g}")
    if consts.s0 <= 1:
        raise ScaleTooLarge("s0 <= 1: no room to expand")
    eps_max = consts.window(alpha)
    width = eps_max if window is None else min(window, eps_max)
    width = min(width, hi - a0)
    cases = family_cases(F, a0, a0 + width)
    a0_q, alpha_q = Fraction(repr(float(a0))), Fraction(repr(float(alpha)))
    s_expr = 1 + (ex.A - a0_q) * alpha_q
    exprs = tuple(expanded_expr(f, c, s_expr)
                  for f, c in zip(F.branch_exprs, cases))
    new = replace(F, branch_exprs=exprs,
                  interval_exact=(a0_q, a0_q + Fraction(repr(float(width)))),
                  name=f"{F.name}/perturbed", declared={})
    return PerturbedFamily(new, F, float(a0), float(alpha), consts, float(width),
                           tuple(cases))


def demo_graphs(T, s, samples=65):
    """Sampled graphs of ``T`` and ``E_s T`` per branch, for plotting."""
    S = expand_map(T, s)
    out = []
    for k, (br, eb) in enumerate(zip(T.branches, S.branches), start=1):
        x = np.linspace(br.left, br.right, samples)
        out.append({"branch": k, "case": eb.case, "x": x, "T": br.f(x),
                    "EsT": eb.f(x), "image": br.image, "expanded_image": eb.image})
    return out


def demo_text(T, s, samples=65):
    lines = [f"# expand-demo s={s!r} a={T.a!r}"]
    for g in demo_graphs(T, s, samples):
        for label, ys in (("T", g["T"]), ("EsT", g["EsT"])):
            lines.append(f"# branch {g['branch']} {label} case={g['case']}")
            lines.extend(f"{x:.17g} {y:.17g}" for x, y in zip(g["x"], ys))
            lines.append("")
    return "\n".join(lines)
