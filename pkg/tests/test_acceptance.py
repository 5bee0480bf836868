"""The nine acceptance criteria, each at its stated tolerance and budget.

Every test records one ``acceptance k: PASS|FAIL`` line; the lines are
repeated in the terminal summary.
"""

import time

import numpy as np
import pytest

from _branches import random_branch_map
from pwexpand import cli
from pwexpand.covering import image, tilde_chain, tilde_image, weakly_covering_N
from pwexpand.density import (density_bounds, fixed_point_residual,
                              liverani_lower_bound, stationary_density, ulam_matrix)
from pwexpand.errors import Infeasible, NonSmoothPoint, NotCoveringWithin
from pwexpand.expand import (CASES, FULL, TOUCH_HI, TOUCH_LO, compute_constants,
                             expand_branch, expand_map, max_scale, perturbed_family,
                             slope_factor)
from pwexpand.family import instantiate, itinerary_of_point, xi, xi_deriv
from pwexpand.gallery import (EXAMPLES, FIGURE1_DELTA, FIGURE1_INTERVAL,
                              corollary_check, figure1_template, load_example)
from pwexpand.intervals import IntervalUnion
from pwexpand.symbolic import check_nested
from pwexpand.typicality import sweep


def test_1_expansion_cases(report):
    rng = np.random.default_rng(1)
    t = time.perf_counter()
    x = np.linspace(-0.999, 0.999, 33)
    worst_end, worst_slope, ok = 0.0, 0.0, True
    for case in CASES:
        for _ in range(200):
            br = random_branch_map(rng, case).branches[0]
            ok &= bool(np.array_equal(expand_branch(br, 1.0).branch.f(x), br.f(x)))
            images = [expand_branch(br, s).image for s in (1.0, 1.05, 1.1, 1.2)]
            ok &= all(u[0] >= v[0] - 1e-15 and u[1] <= v[1] + 1e-15
                      for u, v in zip(images, images[1:]))
            if case in (TOUCH_LO, FULL):
                worst_end = max(worst_end, max(abs(im[0] + 1) for im in images))
            if case in (TOUCH_HI, FULL):
                worst_end = max(worst_end, max(abs(im[1] - 1) for im in images))
            for s in (1.05, 1.2):
                r = expand_branch(br, s).branch.df(x) / br.df(x)
                worst_slope = max(worst_slope,
                                  float(np.max(np.abs(r / slope_factor(case, s) - 1))))
    dt = time.perf_counter() - t
    passed = ok and worst_end < 1e-12 and worst_slope < 1e-12 and dt < 5
    assert report(1, passed, f"800 branches, identity/nesting {ok}, endpoint drift "
                  f"{worst_end:.1e}, slope rel err {worst_slope:.1e}, {dt:.2f} s")


def test_2_expand_demo(report, capsys):
    t = time.perf_counter()
    code = cli.main(["expand-demo", "lambda4", "--a", "0.05", "--s", "1.2"])
    text = capsys.readouterr().out
    dt = time.perf_counter() - t
    blocks, current = {}, None
    for line in text.splitlines():
        if line.startswith("# branch"):
            _, _, k, label, case = line.split()
            current = (int(k), label, case.split("=")[1])
            blocks[current] = []
        elif line and not line.startswith("#"):
            blocks[current].append(float(line.split()[1]))
    strict, cases = True, []
    for (k, label, case), ys in blocks.items():
        if label != "T":
            continue
        cases.append(case)
        lo0, hi0 = min(ys), max(ys)
        e = blocks[(k, "EsT", case)]
        lo1, hi1 = min(e), max(e)
        if case == FULL:
            strict &= lo1 == lo0 and hi1 == hi0
        else:
            strict &= lo1 <= lo0 and hi0 <= hi1 and (hi1 - lo1) > (hi0 - lo0) + 1e-9
    passed = code == 0 and strict and dt < 1
    assert report(2, passed, f"cases {cases}, strict growth except full: {strict}, "
                  f"{dt:.2f} s")


def test_3_constants(report):
    c = compute_constants(4, 4, 1, 0, 0.9)
    try:
        compute_constants(2, 2, 1, 0, 0.9)
        infeasible = False
    except Infeasible:
        infeasible = True
    passed = abs(c.alpha0 - 4.7059) < 1e-3 and infeasible
    assert report(3, passed, f"alpha0 = {c.alpha0:.6f}, lambda=2 infeasible: {infeasible}")


def test_4_nested_subshift(report, capsys):
    t = time.perf_counter()
    F = load_example("lambda4")
    P = perturbed_family(F, 0.0)
    assert P.alpha == pytest.approx(2 * P.constants.alpha0)
    eps = P.constants.window(P.alpha)
    T0 = instantiate(P.family, P.a0)
    T1 = instantiate(P.family, P.a0 + eps / 2)
    rep = check_nested(T0, T1, 12, slack=1e-10)
    dt = time.perf_counter() - t
    code = cli.main(["nested", "doubling", "--a0", "0"])
    capsys.readouterr()
    passed = rep.passed and rep.word_inclusion and rep.image_containment and dt < 60 \
        and code == cli.EXIT_INFEASIBLE
    assert report(4, passed, f"depth 12, {rep.words_T0} words, inclusion "
                  f"{rep.word_inclusion}, containment {rep.image_containment}, "
                  f"{dt:.2f} s; doubling exit code {code}")


def test_5_doubling_density(report):
    t = time.perf_counter()
    T = instantiate(load_example("doubling"), 0.0)
    M = ulam_matrix(T, 2 ** 12)
    d = stationary_density(M)
    err = float(np.max(np.abs(d.values - 0.5)))
    res = fixed_point_residual(M, d)
    bound = liverani_lower_bound(T, 1)
    lo = density_bounds(d).min
    dt = time.perf_counter() - t
    passed = err < 1e-3 and res < 1e-10 and bound == 0.125 and bound <= lo and dt < 30
    assert report(5, passed, f"sup err {err:.1e}, residual {res:.1e}, "
                  f"bound {bound} <= min {lo:.6f}, {dt:.2f} s")


def _gallery_maps():
    maps = []
    for name in EXAMPLES:
        F = load_example(name)
        maps += [instantiate(F, float(a)) for a in F.verification_grid(5)]
    return maps


def test_6_covering(report):
    t = time.perf_counter()
    full = [instantiate(load_example(n), 0.3) for n in ("doubling", "tripling")]
    ones = all(weakly_covering_N(T, (b.left, b.right)) == 1
               for T in full for b in T.branches)
    ctrl = instantiate(load_example("negative_control"), 0.5)
    try:
        weakly_covering_N(ctrl, (0.0, 0.5))
        control_fails = False
    except NotCoveringWithin:
        control_fails = True
    maps = _gallery_maps()
    contained = True
    for T in maps:
        for b in T.branches:
            chain = tilde_chain(T, (b.left, b.right), 8)
            fwd = IntervalUnion.from_intervals([(b.left, b.right)])
            for piece in chain[1:]:
                fwd = image(T, fwd)
                contained &= piece.issubset(fwd, 1e-9)
    rng = np.random.default_rng(6)
    monotone, checked = True, 0
    for T in maps:
        for s in (1.0, 1.1):
            if s > max_scale(T):
                continue
            S = expand_map(T, s)
            for _ in range(20):
                lo = np.sort(rng.uniform(-1, 1, 4))
                U = IntervalUnion.from_intervals([(lo[0], lo[1]), (lo[2], lo[3])]
                                                 + [(b.left, b.right) for b in T.branches
                                                    if rng.random() < 0.5])
                monotone &= tilde_image(T, U).issubset(tilde_image(S, U), 1e-12)
                checked += 1
    dt = time.perf_counter() - t
    passed = ones and control_fails and contained and monotone and dt < 10
    assert report(6, passed, f"N=1 {ones}, control fails {control_fails}, "
                  f"T~^n in T^n (n<=8, {len(maps)} maps) {contained}, monotone in s "
                  f"{monotone} ({checked} sets), {dt:.2f} s")


@pytest.mark.slow
def test_7_typicality(report):
    t = time.perf_counter()
    dbl = sweep(load_example("doubling"), 200, n=200_000, bins=2 ** 12)
    fig = sweep(load_example("figure1"), 200, n=200_000, bins=2 ** 12,
                delta=float(FIGURE1_DELTA))
    dt = time.perf_counter() - t
    passed = dbl.fraction_below >= 0.99 and fig.fraction_below >= 0.95 and dt < 600
    assert report(7, passed, f"doubling {dbl.fraction_below:.1%} below 0.02 "
                  f"(median {dbl.summary()['median_ks']:.4f}), figure1 "
                  f"{fig.fraction_below:.1%} (median {fig.summary()['median_ks']:.4f}), "
                  f"{dt:.0f} s")


def test_8_xi_derivative(report):
    t = time.perf_counter()
    rng = np.random.default_rng(8)
    fams = [load_example("lambda4"), load_example("figure1")]
    h = 1e-8
    worst, n = 0.0, 0
    while n < 500:
        F = fams[n % 2]
        lo, hi = F.interval
        a = float(rng.uniform(lo + 1e-6, hi - 1e-6))
        j = int(rng.integers(1, 11))
        try:
            words = {itinerary_of_point(F, b, j) for b in (a - 2 * h, a, a + 2 * h)}
        except NonSmoothPoint:
            continue
        if len(words) > 1:
            continue
        fd = (xi(F, a + h, j) - xi(F, a - h, j)) / (2 * h)
        d = xi_deriv(F, a, j)
        worst = max(worst, abs(d - fd) / abs(d))
        n += 1
    dt = time.perf_counter() - t
    passed = worst < 1e-5 and dt < 30
    assert report(8, passed, f"{n} pairs, max rel err {worst:.1e}, {dt:.2f} s")


def test_9_corollary(report):
    rep = corollary_check(figure1_template(), FIGURE1_DELTA, FIGURE1_INTERVAL)
    passed = rep.passed and rep.required_inf_derivative == pytest.approx(3.5) \
        and rep.margin > 0
    assert report(9, passed, f"witness cell {rep.witness}, requires inf|T'| > "
                  f"{rep.required_inf_derivative:g}, have {rep.inf_derivative:g}, "
                  f"margin {rep.margin:g}")
