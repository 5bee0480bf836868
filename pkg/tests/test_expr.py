from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pwexpand import expr as ex
from pwexpand.errors import ParseError


def test_precedence():
    assert ex.evaluate(ex.parse("-2^2")) == -4
    assert ex.evaluate(ex.parse("2*3 + 4/2 - 1")) == 7
    assert ex.evaluate(ex.parse("(1 + 2)^2")) == 9
    assert ex.evaluate(ex.parse("2 - 3 - 4")) == -5
    assert ex.evaluate(ex.parse("8 / 4 / 2")) == 1


def test_variables_and_functions():
    e = ex.parse("abs(x - a) + min(x, a, 0.5) + max(x, 2)")
    assert ex.evaluate(e, x=0.25, a=1.0) == pytest.approx(0.75 + 0.25 + 2)


def test_literals_are_exact():
    e = ex.parse("0.1")
    assert isinstance(e, ex.Num) and e.value == Fraction(1, 10)


@pytest.mark.parametrize("text, column", [
    ("2*(x + 1", 9), ("2*x +", 6), ("x $ 2", 3), ("", 1), ("x^1.5", 3),
])
def test_parse_errors_report_position(text, column):
    with pytest.raises(ParseError) as err:
        ex.parse(text)
    assert err.value.line == 1
    assert err.value.column == column


def test_unknown_name_rejected():
    with pytest.raises(ParseError):
        ex.parse("sin(x)")


def test_diff_rules():
    x = 0.7
    assert ex.evaluate(ex.diff(ex.parse("x^2"), "x"), x=x) == pytest.approx(1.4)
    assert ex.evaluate(ex.diff(ex.parse("a*x"), "a"), x=x, a=3) == pytest.approx(x)
    assert ex.evaluate(ex.diff(ex.parse("1/x"), "x"), x=2) == pytest.approx(-0.25)
    assert ex.evaluate(ex.diff(ex.parse("abs(x)"), "x"), x=-2) == -1


def test_backends_agree():
    e = ex.parse("(3*x - a)^3 / (2 + x^2) - abs(a - x)")
    xs = np.linspace(-1, 1, 11)
    vec = ex.compile_expr(e)(xs, 0.3)
    scal = [ex.compile_expr(e, "float")(float(v), 0.3) for v in xs]
    mp = [float(ex.compile_expr(e, "mpfr", 200)(float(v), 0.3)) for v in xs]
    np.testing.assert_allclose(vec, scal, rtol=1e-15)
    np.testing.assert_allclose(vec, mp, rtol=1e-14)


# random expression trees -------------------------------------------------------

leaves = st.one_of(
    st.sampled_from([ex.X, ex.A]),
    st.fractions(min_value=-5, max_value=5, max_denominator=8).map(ex.Num),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from([ex.add, ex.sub, ex.mul]), children,
                  children).map(lambda t: t[0](t[1], t[2])),
        children.map(ex.neg),
        st.tuples(children, st.integers(0, 3)).map(lambda t: ex.power(*t)),
        st.tuples(st.sampled_from(["min", "max"]), children, children).map(
            lambda t: ex.call(t[0], t[1], t[2])),
        children.map(lambda c: ex.call("abs", c)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@given(trees)
def test_text_round_trip(e):
    back = ex.parse(ex.to_text(e))
    assert ex.parse(ex.to_text(back)) == back
    for x, a in [(0.3, -0.7), (-0.9, 0.2)]:
        assert ex.evaluate(back, x, a) == pytest.approx(ex.evaluate(e, x, a),
                                                        rel=1e-12, abs=1e-12)


@given(trees, st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_diff_matches_finite_difference(e, x, a):
    kinks = [n for n in _walk(e) if isinstance(n, ex.Call)]
    if kinks:
        return
    h = 1e-6
    f = ex.compile_expr(e, "float")
    for var, d in (("x", ex.diff(e, "x")), ("a", ex.diff(e, "a"))):
        if var == "x":
            fd = (f(x + h, a) - f(x - h, a)) / (2 * h)
        else:
            fd = (f(x, a + h) - f(x, a - h)) / (2 * h)
        exact = ex.evaluate(d, x, a)
        assert abs(exact - fd) <= 1e-5 * (1 + abs(exact))


def _walk(e):
    yield e
    for c in ex._children(e):
        yield from _walk(c)
