import pytest
from hypothesis import given, strategies as st

from pwexpand.covering import (check_assumption_5, check_assumption_6, image,
                               tilde_chain, tilde_image, weakly_covering_N)
from pwexpand.errors import NotCoveringWithin
from pwexpand.expand import expand_map
from pwexpand.family import instantiate
from pwexpand.intervals import IntervalUnion


def test_full_branch_maps_cover_in_one_step(doubling, tripling):
    for T in (doubling, tripling):
        assert check_assumption_5(T).per_cell == [1] * T.p


def test_control_does_not_cover(control):
    with pytest.raises(NotCoveringWithin) as err:
        weakly_covering_N(control, (0.0, 0.5))
    assert err.value.residual_length == pytest.approx(1.0)
    # cells outside the invariant subinterval still cover
    assert weakly_covering_N(control, (-1.0, 0.0)) == 1


def test_lambda4_covering(lambda4):
    T = instantiate(lambda4, 0.05)
    assert check_assumption_5(T).per_cell == [2, 2, 1, 2, 2]


def test_tilde_image_only_pushes_whole_cells(tripling):
    U = IntervalUnion.from_intervals([(-1, 0.5)])
    # only the first and middle cells lie inside U
    assert tilde_image(tripling, U).intervals == ((-1.0, 1.0),)
    V = IntervalUnion.from_intervals([(-0.3, 0.9)])
    assert not tilde_image(tripling, V)
    assert image(tripling, V).intervals == ((-1.0, 1.0),)
    assert tilde_image(tripling, [(-0.9, 0.9)]).intervals == ((-1.0, 1.0),)


def _gallery_maps(lambda4, figure1):
    maps = [instantiate(lambda4, a) for a in (0.0, 0.05, 0.1)]
    maps += [instantiate(figure1, a) for a in (1.0, 1.02, 1.04)]
    return maps


@pytest.mark.parametrize("n", [1, 3, 8])
def test_tilde_chain_inside_forward_images(lambda4, figure1, control, n):
    for T in _gallery_maps(lambda4, figure1) + [control]:
        for br in T.branches:
            chain = tilde_chain(T, (br.left, br.right), n)
            forward = IntervalUnion.from_intervals([(br.left, br.right)])
            for piece in chain[1:]:
                forward = image(T, forward)
                assert piece.issubset(forward, 1e-9)


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(0, 1)), min_size=1, max_size=4),
       st.floats(1.0, 1.1))
def test_tilde_image_monotone_in_s(pieces, s):
    from pwexpand.family import instantiate as inst
    from pwexpand.gallery import load_example

    T = inst(load_example("lambda4"), 0.05)
    U = IntervalUnion.from_intervals([(lo, min(1.0, lo + w)) for lo, w in pieces])
    assert tilde_image(T, U).issubset(tilde_image(expand_map(T, s), U), 1e-12)


def test_assumption_6(figure1, doubling):
    rep = check_assumption_6(figure1, 1, 0.4)
    assert rep.passed
    assert rep.required_inf_derivative == pytest.approx(3.5)
    assert rep.inf_derivative == pytest.approx(4.0)
    assert not check_assumption_6(doubling, 1, 0.9).passed
    assert check_assumption_6(doubling, 3, 0.2).passed
    with pytest.raises(ValueError):
        check_assumption_6(doubling, 1, 1.5)
