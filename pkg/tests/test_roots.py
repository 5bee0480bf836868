import numpy as np
import pytest
from hypothesis import given, strategies as st

from pwexpand.errors import RootSolveFailure
from pwexpand.roots import bracketed_root, monotone_inverse, scalar_inverse


def f(x):
    return x ** 3 + 2 * x


def df(x):
    return 3 * x ** 2 + 2


@given(st.floats(-1, 1))
def test_inverse_of_increasing_branch(x):
    y = f(np.array([x]))
    r = monotone_inverse(f, df, y, -1.0, 1.0)
    assert r[0] == pytest.approx(x, abs=1e-12)


def test_decreasing_branch():
    g = lambda x: -3 * x + 0.5  # noqa: E731
    dg = lambda x: -3 + 0 * x  # noqa: E731
    y = np.linspace(-2, 2, 7)
    x = monotone_inverse(g, dg, y, -1.0, 1.0, increasing=False)
    assert np.allclose(g(x), y, atol=1e-12)


def test_unbracketed_target_raises():
    with pytest.raises(RootSolveFailure):
        scalar_inverse(f, df, 10.0, -1.0, 1.0)


def test_bracketed_root():
    assert bracketed_root(np.cos, 0.0, 3.0) == pytest.approx(np.pi / 2, abs=1e-12)
    with pytest.raises(RootSolveFailure):
        bracketed_root(lambda x: x * x + 1, -1.0, 1.0)
