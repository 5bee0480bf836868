"""Arithmetic expressions in the variables ``x`` and ``a``.

Branch functions, breakpoint functions and the marked point of a family are
stored as small expression trees so that they can be differentiated exactly,
serialized back to text and compiled for fast evaluation.

Grammar (highest precedence first)::

    power   := primary ['^' int]          ('**' is accepted for '^')
    unary   := ('-' | '+') unary | power
    term    := unary (('*' | '/') unary)*
    expr    := term (('+' | '-') term)*
    primary := number | 'x' | 'a' | func '(' expr {',' expr} ')' | '(' expr ')'
    func    := 'abs' | 'min' | 'max'

Literals are kept as exact fractions, so ``0.1`` means 1/10 in every backend.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParseError

VARIABLES = ("x", "a")
FUNCTIONS = ("abs", "min", "max")


class Expr:
    """Base class for expression nodes; supports ``+ - * / **`` with numbers."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        return power(self, k)

    def __str__(self):
        return to_text(self)

    def __call__(self, x=0.0, a=0.0):
        return compile_expr(self, "float")(x, a)


@dataclass(frozen=True, eq=True, repr=False)
class Num(Expr):
    value: Fraction

    def __repr__(self):
        return f"Num({self.value})"


@dataclass(frozen=True, eq=True, repr=False)
class Var(Expr):
    name: str

    def __repr__(self):
        return f"Var({self.name})"


@dataclass(frozen=True, eq=True, repr=False)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __repr__(self):
        return f"BinOp({self.op!r}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Neg(Expr):
    arg: Expr

    def __repr__(self):
        return f"Neg({self.arg!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: int

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


@dataclass(frozen=True, eq=True, repr=False)
class Call(Expr):
    """Function node.

    Besides the user-facing ``abs``, ``min`` and ``max`` there are two internal
    functions produced by differentiation: ``sign(u)`` and
    ``select(u, v, p, q)`` which is ``p`` where ``u <= v`` and ``q`` elsewhere.
    """

    func: str
    args: tuple

    def __repr__(self):
        return f"Call({self.func!r}, {self.args!r})"


X = Var("x")
A = Var("a")
ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))


def as_expr(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, Fraction)):
        return Num(Fraction(value))
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ValueError(f"non-finite literal {value!r}")
        return Num(Fraction(repr(value)))
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, np.floating):
        return as_expr(float(value))
    if isinstance(value, np.integer):
        return Num(Fraction(int(value)))
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def _is_num(e, value=None):
    return isinstance(e, Num) and (value is None or e.value == value)


# simplifying constructors ---------------------------------------------------

def add(u, v):
    if _is_num(u) and _is_num(v):
        return Num(u.value + v.value)
    if _is_num(u, 0):
        return v
    if _is_num(v, 0):
        return u
    if isinstance(v, Neg):
        return BinOp("-", u, v.arg)
    return BinOp("+", u, v)


def sub(u, v):
    if _is_num(u) and _is_num(v):
        return Num(u.value - v.value)
    if _is_num(v, 0):
        return u
    if _is_num(u, 0):
        return neg(v)
    if u == v:
        return ZERO
    return BinOp("-", u, v)


def mul(u, v):
    if _is_num(u) and _is_num(v):
        return Num(u.value * v.value)
    if _is_num(u, 0) or _is_num(v, 0):
        return ZERO
    if _is_num(u, 1):
        return v
    if _is_num(v, 1):
        return u
    if _is_num(u, -1):
        return neg(v)
    if _is_num(v, -1):
        return neg(u)
    return BinOp("*", u, v)


def div(u, v):
    if _is_num(v, 0):
        raise ZeroDivisionError("division by literal zero")
    if _is_num(u) and _is_num(v):
        return Num(u.value / v.value)
    if _is_num(u, 0):
        return ZERO
    if _is_num(v, 1):
        return u
    return BinOp("/", u, v)


def neg(u):
    if _is_num(u):
        return Num(-u.value)
    if isinstance(u, Neg):
        return u.arg
    return Neg(u)


def power(u, k):
    if int(k) != k:
        raise ValueError("only integer powers are supported")
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return u
    if _is_num(u):
        if u.value == 0 and k < 0:
            raise ZeroDivisionError("zero to a negative power")
        return Num(u.value ** k)
    return Pow(u, k)


def call(func, *args):
    if func in ("min", "max") and all(_is_num(t) for t in args):
        pick = min if func == "min" else max
        return Num(pick(t.value for t in args))
    if func == "abs" and _is_num(args[0]):
        return Num(abs(args[0].value))
    if func == "sign" and _is_num(args[0]):
        v = args[0].value
        return Num(Fraction((v > 0) - (v < 0)))
    if func == "select" and args[2] == args[3]:
        return args[2]
    return Call(func, tuple(args))


# tree utilities -------------------------------------------------------------

def free_vars(e):
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    out = set()
    for child in _children(e):
        out |= free_vars(child)
    return out


def _children(e):
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, Neg):
        return (e.arg,)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Call):
        return e.args
    return ()


def substitute(e, mapping):
    """Replace variables by expressions, e.g. ``substitute(f, {"x": 2*X})``."""
    mapping = {k: as_expr(v) for k, v in mapping.items()}

    def walk(node):
        if isinstance(node, Var):
            return mapping.get(node.name, node)
        if isinstance(node, Num):
            return node
        if isinstance(node, BinOp):
            return _BUILD[node.op](walk(node.left), walk(node.right))
        if isinstance(node, Neg):
            return neg(walk(node.arg))
        if isinstance(node, Pow):
            return power(walk(node.base), node.exponent)
        return call(node.func, *(walk(t) for t in node.args))

    return walk(e)


_BUILD = {"+": add, "-": sub, "*": mul, "/": div}


@functools.lru_cache(maxsize=4096)
def diff(e, var):
    """Exact derivative of ``e`` with respect to ``var`` ("x" or "a").

    Kinks of abs/min/max get a one-sided derivative (the ``u <= v`` side for
    min/max ties, zero for ``abs`` at the origin).
    """
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return neg(diff(e.arg, var))
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        du, dv = diff(u, var), diff(v, var)
        if e.op == "+":
            return add(du, dv)
        if e.op == "-":
            return sub(du, dv)
        if e.op == "*":
            return add(mul(du, v), mul(u, dv))
        if _is_num(dv, 0):
            return div(du, v)
        return div(sub(mul(du, v), mul(u, dv)), power(v, 2))
    if isinstance(e, Pow):
        du = diff(e.base, var)
        k = e.exponent
        return mul(mul(Num(Fraction(k)), power(e.base, k - 1)), du)
    f, args = e.func, e.args
    if f == "abs":
        return mul(call("sign", args[0]), diff(args[0], var))
    if f in ("min", "max"):
        folded = args[0]
        for nxt in args[1:]:
            folded = Call(f, (folded, nxt))
        u, v = folded.args
        du, dv = diff(u, var), diff(v, var)
        if f == "min":
            return call("select", u, v, du, dv)
        return call("select", u, v, dv, du)
    if f == "sign":
        return ZERO
    if f == "select":
        u, v, p, q = args
        return call("select", u, v, diff(p, var), diff(q, var))
    raise ValueError(f"unknown function {f}")


# text form ------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_number(q):
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"({q.numerator}/{q.denominator})"
    k = max(twos, fives)
    digits = abs(q.numerator) * 10 ** k // q.denominator
    s = str(digits).rjust(k + 1, "0")
    s = f"{s[:-k]}.{s[-k:]}"
    return "-" + s if q < 0 else s


def to_text(e):
    """Render ``e`` in the grammar accepted by :func:`parse`."""
    return _text(e, 0)


def _text(e, ctx):
    if isinstance(e, Num):
        s = _fmt_number(e.value)
        if s.startswith("-") and ctx > 0:
            return f"({s})"
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({', '.join(_text(t, 0) for t in e.args)})"
    if isinstance(e, Pow):
        return f"{_text(e.base, 4)}^{e.exponent}" if e.exponent >= 0 else \
            f"{_text(e.base, 4)}^({e.exponent})"
    if isinstance(e, Neg):
        s = "-" + _text(e.arg, 3)
        return f"({s})" if ctx > 1 else s
    p = _PREC[e.op]
    left = _text(e.left, p)
    right = _text(e.right, p + 1)
    s = f"{left} {e.op} {right}"
    return f"({s})" if p < ctx else s


# parser ---------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


def _position(text, offset):
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


class _Parser:
    def __init__(self, text, source=None):
        self.text = text
        self.source = source
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                self.fail(f"unexpected character {text[pos]!r}", pos)
            kind = m.lastgroup
            if kind != "ws":
                value = m.group()
                if value == "**":
                    value = "^"
                self.tokens.append((kind, value, pos))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def fail(self, message, offset):
        line, col = _position(self.text, offset)
        raise ParseError(message, line, col, self.source)

    @property
    def tok(self):
        return self.tokens[self.i]

    def take(self, value=None):
        kind, val, pos = self.tok
        if value is not None and val != value:
            shown = val or "end of input"
            self.fail(f"expected {value!r}, found {shown!r}", pos)
        self.i += 1
        return kind, val, pos

    def parse(self):
        if self.tok[0] == "end":
            self.fail("empty expression", 0)
        e = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            self.fail(f"unexpected {val!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.tok[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = BinOp(op, e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.tok[1] in ("*", "/"):
            op, pos = self.take()[1:]
            rhs = self.unary()
            if op == "/" and isinstance(e, Num) and isinstance(rhs, Num):
                # rational literals such as 1/3 stay exact numbers
                if rhs.value == 0:
                    self.fail("division by zero", pos)
                e = Num(e.value / rhs.value)
            else:
                e = BinOp(op, e, rhs)
        return e

    def unary(self):
        if self.tok[1] == "-":
            self.take()
            arg = self.unary()
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        if self.tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok[1] == "^":
            self.take()
            k = self.int_exponent()
            base = Pow(base, k)
            if self.tok[1] == "^":
                self.fail("chained powers are ambiguous; add parentheses",
                          self.tok[2])
        return base

    def int_exponent(self):
        paren = self.tok[1] == "("
        if paren:
            self.take()
        sign = 1
        if self.tok[1] in ("-", "+"):
            sign = -1 if self.take()[1] == "-" else 1
        kind, val, pos = self.take()
        if kind != "num" or not val.isdigit():
            self.fail("exponent must be an integer literal", pos)
        if paren:
            self.take(")")
        return sign * int(val)

    def primary(self):
        kind, val, pos = self.tok
        if kind == "num":
            self.take()
            return Num(Fraction(val))
        if kind == "name":
            self.take()
            if val in VARIABLES:
                return Var(val)
            if val in FUNCTIONS:
                return self.call(val, pos)
            self.fail(f"unknown name {val!r}", pos)
        if val == "(":
            self.take()
            e = self.expr()
            if self.tok[1] != ")":
                self.fail("unbalanced parenthesis: missing ')'", self.tok[2])
            self.take()
            return e
        if kind == "end":
            self.fail("unexpected end of input", pos)
        self.fail(f"unexpected {val!r}", pos)

    def call(self, name, pos):
        if self.tok[1] != "(":
            self.fail(f"{name} needs an argument list", self.tok[2])
        self.take()
        args = [self.expr()]
        while self.tok[1] == ",":
            self.take()
            args.append(self.expr())
        if self.tok[1] != ")":
            self.fail("unbalanced parenthesis: missing ')'", self.tok[2])
        self.take()
        if name == "abs" and len(args) != 1:
            self.fail("abs takes exactly one argument", pos)
        if name in ("min", "max") and len(args) < 2:
            self.fail(f"{name} takes at least two arguments", pos)
        return Call(name, tuple(args))


def parse(text, source=None):
    """Parse ``text`` into an expression tree; raises :class:`ParseError`."""
    if not isinstance(text, str):
        return as_expr(text)
    return _Parser(text, source).parse()


# compilation ----------------------------------------------------------------

def _np_select(u, v, p, q):
    return np.where(u <= v, p, q)


def _py_select(u, v, p, q):
    return p if u <= v else q


def _py_sign(u):
    return (u > 0) - (u < 0)


def _fold(func, args):
    out = args[0]
    for nxt in args[1:]:
        out = f"{func}({out}, {nxt})"
    return out


def _source(e, consts):
    if isinstance(e, Num):
        consts.append(e.value)
        return f"_c{len(consts) - 1}"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinOp):
        return f"({_source(e.left, consts)} {e.op} {_source(e.right, consts)})"
    if isinstance(e, Neg):
        return f"(-{_source(e.arg, consts)})"
    if isinstance(e, Pow):
        return f"({_source(e.base, consts)} ** {e.exponent})"
    args = [_source(t, consts) for t in e.args]
    if e.func in ("min", "max"):
        return _fold(f"_{e.func}", args)
    return f"_{e.func}({', '.join(args)})"


def _exact_bits(c):
    """Bits needed to hold a dyadic rational exactly (None otherwise).

    Short literals keep mpfr products with long operands cheap.
    """
    d = c.denominator
    if d & (d - 1):
        return None
    return max(2, abs(c.numerator).bit_length())


@functools.lru_cache(maxsize=4096)
def compile_expr(e, backend="numpy", precision=None):
    """Compile ``e`` into a function ``f(x, a)``.

    backend
        ``"numpy"`` (elementwise on arrays, result broadcast to the inputs),
        ``"float"`` (Python scalars) or ``"mpfr"`` (gmpy2 numbers; literals are
        rounded to ``precision`` bits).
    """
    consts = []
    body = _source(e, consts)
    if backend == "numpy":
        ns = {"_abs": np.abs, "_min": np.minimum, "_max": np.maximum,
              "_sign": np.sign, "_select": _np_select}
        values = [float(c) for c in consts]
    elif backend == "float":
        ns = {"_abs": abs, "_min": min, "_max": max, "_sign": _py_sign,
              "_select": _py_select}
        values = [float(c) for c in consts]
    elif backend == "mpfr":
        import gmpy2

        prec = precision or 53
        ns = {"_abs": abs, "_min": min, "_max": max, "_sign": _py_sign,
              "_select": _py_select}
        values = [gmpy2.mpfr(gmpy2.mpq(c.numerator, c.denominator),
                             _exact_bits(c) or prec) for c in consts]
    else:
        raise ValueError(f"unknown backend {backend!r}")
    for i, v in enumerate(values):
        ns[f"_c{i}"] = v
    raw = eval(f"lambda x, a: {body}", ns)  # noqa: S307 - generated from a parsed tree
    if backend != "numpy":
        return raw

    def f(x, a):
        x = np.asarray(x, dtype=float)
        a = np.asarray(a, dtype=float)
        out = raw(x, a)
        shape = np.broadcast_shapes(x.shape, a.shape)
        if np.shape(out) != shape:
            out = np.broadcast_to(out, shape).astype(float)
        return out

    f.raw = raw
    return f


def evaluate(e, x=0.0, a=0.0):
    """Evaluate ``e`` at scalar ``x`` and ``a``."""
    return compile_expr(as_expr(e), "float")(x, a)
