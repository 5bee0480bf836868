import numpy as np
import pytest
from hypothesis import given, strategies as st

from _branches import random_branch_map
from pwexpand.errors import Infeasible, ScaleTooLarge
from pwexpand.expand import (CASES, FULL, INTERIOR, TOUCH_HI, TOUCH_LO,
                             branch_scale_limit, classify, compute_constants,
                             demo_graphs, demo_text, expand_branch, expand_map,
                             expanded_image, family_cases, family_constants,
                             max_scale, perturbed_family, slope_factor)
from pwexpand.family import instantiate


@pytest.mark.parametrize("image, case", [((-1, 1), FULL), ((-1, 0.2), TOUCH_LO),
                                         ((-0.3, 1), TOUCH_HI), ((-0.5, 0.5), INTERIOR)])
def test_classify(image, case):
    assert classify(image) == case


@given(st.sampled_from(CASES), st.integers(0, 2 ** 32 - 1),
       st.floats(1.0, 1.2), st.floats(1.0, 1.2))
def test_expanded_images_nest(case, seed, s, t):
    s, t = sorted((s, t))
    T = random_branch_map(np.random.default_rng(seed), case)
    br = T.branches[0]
    lo0, hi0 = br.image
    lo1, hi1 = expand_branch(br, s).image
    lo2, hi2 = expand_branch(br, t).image
    assert lo2 <= lo1 + 1e-12 <= lo0 + 2e-12 and hi0 <= hi1 + 1e-12 <= hi2 + 2e-12
    assert -1 - 1e-12 <= lo2 and hi2 <= 1 + 1e-12
    assert expanded_image(br.image, case, s) == pytest.approx((lo1, hi1), abs=1e-12)


@given(st.sampled_from(CASES), st.integers(0, 2 ** 32 - 1), st.floats(1.0, 1.2))
def test_slope_scaling(case, seed, s):
    T = random_branch_map(np.random.default_rng(seed), case)
    br = T.branches[0]
    x = np.linspace(-0.99, 0.99, 9)
    ratio = expand_branch(br, s).branch.df(x) / br.df(x)
    assert np.allclose(ratio, slope_factor(case, s), rtol=1e-12)


def test_scale_limits():
    assert branch_scale_limit((-0.5, 0.25), INTERIOR) == pytest.approx(2.0)
    assert branch_scale_limit((-1, 0.0), TOUCH_LO) == pytest.approx(3.0)
    assert branch_scale_limit((0.0, 1.0), TOUCH_HI) == pytest.approx(3.0)
    assert branch_scale_limit((-1, 1), FULL, ceiling=7.0) == 7.0


def test_expand_map_rejects_large_scale(lambda4):
    T = instantiate(lambda4, 0.05)
    s0 = max_scale(T)
    assert s0 == pytest.approx(11 / 9)
    S = expand_map(T, s0)
    assert all(-1 - 1e-12 <= b.image[0] and b.image[1] <= 1 + 1e-12 for b in S.branches)
    with pytest.raises(ScaleTooLarge):
        expand_map(T, 1.3)
    with pytest.raises(ValueError):
        expand_map(T, 0.9)


def test_constants_closed_form():
    c = compute_constants(4, 4, 1, 0, 0.9)
    assert c.alpha0 == pytest.approx(2 * (4 / 3) / (0.9 - 1 / 3))
    assert c.endpoint_speed_gap(c.alpha0, 1 / c.alpha0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(Infeasible):
        compute_constants(2, 2, 1, 0, 0.9)
    with pytest.raises(Infeasible):
        compute_constants(1, 1, 1, 0, 0.9)


def test_family_constants_and_perturbation(lambda4):
    assert family_cases(lambda4) == [TOUCH_LO, INTERIOR, FULL, INTERIOR, TOUCH_HI]
    c = family_constants(lambda4)
    assert c.delta == pytest.approx(0.5)
    assert c.alpha0 == pytest.approx(2 * (4 / 3) / (0.5 - 1 / 3))
    P = perturbed_family(lambda4, 0.0)
    assert P.alpha == pytest.approx(2 * c.alpha0)
    assert P.window == pytest.approx(min(1, c.s0 - 1) / P.alpha)
    a = P.a0 + P.window / 2
    T, S = instantiate(lambda4, a), instantiate(P.family, a)
    ref = expand_map(T, P.scale(a))
    x = np.linspace(-0.99, 0.99, 41)
    assert np.allclose(S.values(x), ref.values(x), equal_nan=True)
    with pytest.raises(Infeasible):
        perturbed_family(lambda4, 0.0, alpha=1.0)


def test_demo(lambda4):
    T = instantiate(lambda4, 0.05)
    graphs = demo_graphs(T, 1.2, samples=5)
    assert [g["case"] for g in graphs] == family_cases(lambda4)
    text = demo_text(T, 1.2, samples=5)
    assert text.startswith("# expand-demo s=1.2")
    assert text.count("# branch") == 10
