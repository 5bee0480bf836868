"""Reading and writing family definition files.

A family file is a JSON object::

    {
      "name": "doubling",
      "domain": [-1, 1],
      "breakpoints": ["0"],
      "branches": ["2*x + 1", "2*x - 1"],
      "point_X": "a",
      "param_interval": [-0.9, 0.9],
      "bounds": {"lambda": 2}
    }

``breakpoints`` are the interior breakpoints (expressions in ``a``) and
``branches`` the branch expressions in ``x`` and ``a``, one more than the
breakpoints. ``domain`` entries and ``param_interval`` entries are numbers
or constant expressions; ``bounds`` (optional) may declare ``lambda``,
``Lambda``, ``L``, ``eta`` and ``zeta``. ``name`` and ``description`` are
optional. Any other key is an error.

A family on ``[u, v]`` is conjugated to ``[-1, 1]`` on load, and ``X`` with
it. Expression syntax errors are reported at their line and column in the
file.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

from . import expr as ex
from .errors import ParseError, SemanticError
from .family import MapFamily
from .maps import conjugate_exprs

REQUIRED = ("domain", "breakpoints", "branches", "point_X", "param_interval")
OPTIONAL = ("name", "description", "bounds")


def _locate(text, needle, start=0):
    """Line and column of the JSON string literal ``needle`` in ``text``."""
    lit = json.dumps(needle)
    pos = text.find(lit, start)
    if pos < 0:
        return None
    pos += 1
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col, pos


class _Reader:
    def __init__(self, text, source):
        self.text = text
        self.source = source
        self.cursor = 0

    def expression(self, value, where, allowed):
        if isinstance(value, bool) or not isinstance(value, (str, int, float)):
            raise SemanticError(f"{where}: expected an expression, got {value!r}")
        if not isinstance(value, str):
            return ex.as_expr(value)
        try:
            e = ex.parse(value)
        except ParseError as err:
            hit = _locate(self.text, value, self.cursor) or _locate(self.text, value)
            line, col = (hit[0], hit[1] + err.column - 1) if hit and err.line == 1 \
                else (err.line, err.column)
            msg = str(err).split(": ", 1)[-1]
            raise ParseError(f"{where}: {msg}", line, col, self.source) from None
        hit = _locate(self.text, value, self.cursor)
        if hit:
            self.cursor = hit[2]
        extra = ex.free_vars(e) - set(allowed)
        if extra:
            raise SemanticError(
                f"{where}: variable(s) {sorted(extra)} not allowed here")
        return e

    def constant(self, value, where):
        e = self.expression(value, where, ())
        if isinstance(e, ex.Num):
            return e.value
        v = float(ex.evaluate(e))
        if not math.isfinite(v):
            raise SemanticError(f"{where}: {value!r} is not a finite number")
        return Fraction(v)


def parse_family(text, source=None, audit=True):
    """Parse a family document into a :class:`MapFamily`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(err.msg, err.lineno, err.colno, source) from None
    if not isinstance(doc, dict):
        raise SemanticError("a family file must contain a JSON object")
    unknown = sorted(set(doc) - set(REQUIRED) - set(OPTIONAL))
    if unknown:
        raise SemanticError(f"unknown key(s): {', '.join(unknown)}")
    missing = [k for k in REQUIRED if k not in doc]
    if missing:
        raise SemanticError(f"missing key(s): {', '.join(missing)}")
    r = _Reader(text, source)
    for key in ("domain", "param_interval"):
        if not isinstance(doc[key], list) or len(doc[key]) != 2:
            raise SemanticError(f"{key} must be a list of two numbers")
    for key in ("breakpoints", "branches"):
        if not isinstance(doc[key], list):
            raise SemanticError(f"{key} must be a list of expressions")
    u, v = (r.constant(val, f"domain[{i}]") for i, val in enumerate(doc["domain"]))
    if not u < v:
        raise SemanticError(f"domain [{u}, {v}] is empty")
    bps = [r.expression(b, f"breakpoints[{i}]", ("a",))
           for i, b in enumerate(doc["breakpoints"])]
    brs = [r.expression(f, f"branches[{i}]", ("x", "a"))
           for i, f in enumerate(doc["branches"])]
    X = r.expression(doc["point_X"], "point_X", ("a",))
    lo, hi = (r.constant(val, f"param_interval[{i}]")
              for i, val in enumerate(doc["param_interval"]))
    bounds = doc.get("bounds", {})
    if not isinstance(bounds, dict):
        raise SemanticError("bounds must be an object")
    bounds = {k: float(r.constant(val, f"bounds.{k}")) for k, val in bounds.items()}
    if (u, v) != (-1, 1):
        bps, brs = conjugate_exprs(bps, brs, ex.Num(u), ex.Num(v))
        X = 2 * (X - u) / (v - u) - 1
        # T' is unchanged, T'' scales by (v-u)/2, values and a-speeds by 2/(v-u)
        scale = 2.0 / float(v - u)
        for key, factor in (("L", 1 / scale), ("eta", scale), ("zeta", scale)):
            if key in bounds:
                bounds[key] *= factor
    return MapFamily((Fraction(lo), Fraction(hi)), tuple(bps), tuple(brs), X,
                     name=str(doc.get("name", source or "family")),
                     declared=bounds, audit=audit)


def load_family(path, audit=True):
    with open(path, encoding="utf-8") as fh:
        return parse_family(fh.read(), source=str(path), audit=audit)


def _num(q):
    q = Fraction(q)
    return int(q) if q.denominator == 1 else ex.to_text(ex.Num(q))


def family_document(F, description=None):
    """JSON-ready dictionary for ``F`` (on ``[-1, 1]``)."""
    lo, hi = F.interval_exact
    doc = {"name": F.name, "domain": [-1, 1],
           "breakpoints": [ex.to_text(b) for b in F.breakpoint_exprs],
           "branches": [ex.to_text(f) for f in F.branch_exprs],
           "point_X": ex.to_text(F.point_expr),
           "param_interval": [_num(lo), _num(hi)]}
    if F.declared:
        doc["bounds"] = dict(F.declared)
    if description:
        doc["description"] = description
    return doc


def serialize_family(F, description=None):
    return json.dumps(family_document(F, description), indent=2) + "\n"
