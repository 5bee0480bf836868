"""Itineraries, cylinders and nested subshifts at finite depth.

The image ``T^j(w)`` of the cylinder of a word ``w`` obeys

    T^{j+1}(w k) = f_k(T^j(w) ∩ D_k),    T^0(empty word) = domain,

and the word ``w k`` is admissible exactly when ``T^j(w) ∩ D_k`` is nonempty.
Words with equal images have identical futures, so admissibility and image
comparisons can be run over the (small) set of distinct images instead of
over the exponentially many words.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .config import TOL
from .errors import (BreakpointHit, CellCountExceeded, MissingCounterpart,
                     OrbitTruncated)
from .maps import refine_partition

MAX_STATES = 1_000_000
_KEY_DIGITS = 12


def format_word(word):
    return " ".join(str(k) for k in word)


def itinerary(T, x, m):
    """Cells (numbered from 1) visited by ``x, T x, ..., T^{m-1} x``."""
    word = []
    for step in range(m):
        try:
            k = T.locate(x)
        except BreakpointHit:
            raise OrbitTruncated(step) from None
        word.append(k + 1)
        x = float(T.branches[k].f(x))
    return tuple(word)


@dataclass(frozen=True)
class WordSet:
    depth: int
    words: frozenset
    short: frozenset = frozenset()

    def __len__(self):
        return len(self.words)

    def __contains__(self, w):
        return tuple(w) in self.words

    def __le__(self, other):
        return self.words <= other.words

    def prefixes(self, k):
        return {w[:k] for w in self.words}

    def is_prefix_closed(self, lower):
        """Every word of ``lower`` (shallower) extends to a word here."""
        return self.prefixes(lower.depth) == set(lower.words)


@dataclass(frozen=True)
class CylinderTable:
    depth: int
    cells: dict

    def __getitem__(self, w):
        return self.cells[tuple(w)]

    def __contains__(self, w):
        return tuple(w) in self.cells


def cylinder_table(T, m):
    if m == 0:
        return CylinderTable(0, {(): tuple(T.domain)})
    P = refine_partition(T, m)
    return CylinderTable(m, {P.word(i): c for i, c in enumerate(P.cells)})


def word_set(T, m):
    """Admissible words of length ``m``, from the depth-``m`` partition."""
    if m == 0:
        return WordSet(0, frozenset({()}))
    P = refine_partition(T, m)
    words = [P.word(i) for i in range(len(P))]
    short = [w for w, ln in zip(words, P.lengths()) if ln < TOL.short_cylinder]
    return WordSet(m, frozenset(words), frozenset(short))


def min_cylinder_length(T, t0):
    return float(refine_partition(T, t0).lengths().min())


# image dynamics -------------------------------------------------------------

def _key(J):
    return (round(J[0], _KEY_DIGITS), round(J[1], _KEY_DIGITS))


def _push(T, k, J):
    """``f_k(J ∩ D_k)`` or None when the intersection is empty."""
    br = T.branches[k]
    lo, hi = max(J[0], br.left), min(J[1], br.right)
    if hi - lo <= 0:
        return None
    y = br.f(np.array([lo, hi]))
    return (float(min(y)), float(max(y)))


def count_words(T, m):
    """Number of admissible words of each length ``0..m``."""
    states = {_key(T.domain): [tuple(T.domain), 1]}
    counts = [1]
    for _ in range(m):
        nxt = {}
        for J, c in states.values():
            for k in range(T.p):
                J2 = _push(T, k, J)
                if J2 is None:
                    continue
                key = _key(J2)
                if key in nxt:
                    nxt[key][1] += c
                else:
                    nxt[key] = [J2, c]
        states = nxt
        if len(states) > MAX_STATES:
            raise CellCountExceeded(f"more than {MAX_STATES} distinct cylinder images")
        counts.append(sum(c for _, c in states.values()))
    return counts


def _hausdorff(J0, J1):
    return max(abs(J0[0] - J1[0]), abs(J0[1] - J1[1]))


@dataclass
class NestedReport:
    depth: int
    passed: bool
    words_T0: int
    words_T1: int
    violations: list = field(default_factory=list)
    max_distance: list = field(default_factory=list)
    max_length_ratio: list = field(default_factory=list)
    states: int = 0

    @property
    def word_inclusion(self):
        return not any(v["kind"] == "missing_counterpart" for v in self.violations)

    @property
    def image_containment(self):
        return not any(v["kind"] == "image" for v in self.violations)

    def as_dict(self):
        return {"depth": self.depth, "pass": self.passed,
                "word_inclusion": self.word_inclusion,
                "image_containment": self.image_containment,
                "words_T0": self.words_T0, "words_T1": self.words_T1,
                "violations": [dict(v, word=format_word(v["word"]))
                               for v in self.violations[:50]],
                "violation_count": len(self.violations),
                "max_distance": self.max_distance,
                "max_length_ratio": self.max_length_ratio,
                "states": self.states}


def check_nested(T0, T1, m, slack=None, raise_on_missing=False):
    """Depth-``m`` check of ``Sigma(T0) ⊆ Sigma(T1)`` with image containment.

    Every word admissible for ``T0`` is matched with the ``T1``-cylinder of
    the same word, and ``T0^j(w) ⊆ T1^j(w)`` is tested for all ``j <= m``
    (endpoints within ``slack``). Violations carry a representative word and
    the number of words sharing the offending pair of images. The observed
    distances and length ratios of matched images are reported per depth.
    """
    if T0.p != T1.p:
        raise ValueError("maps must have the same number of branches")
    slack = TOL.nested_slack if slack is None else slack
    start = (tuple(T0.domain), tuple(T1.domain))
    states = {(_key(start[0]), _key(start[1])): [start[0], start[1], 1, ()]}
    violations = []
    dist, ratio = [], []
    for depth in range(1, m + 1):
        nxt = {}
        worst_d, worst_r = 0.0, 0.0
        for J0, J1, count, word in states.values():
            for k in range(T0.p):
                A = _push(T0, k, J0)
                if A is None:
                    continue
                w = word + (k + 1,)
                B = _push(T1, k, J1)
                if B is None:
                    if raise_on_missing:
                        raise MissingCounterpart(w)
                    violations.append({"kind": "missing_counterpart", "word": w,
                                       "depth": depth, "count": count,
                                       "T0_image": list(A), "T1_image": None})
                    continue
                if A[0] < B[0] - slack or A[1] > B[1] + slack:
                    violations.append({"kind": "image", "word": w, "depth": depth,
                                       "count": count, "T0_image": list(A),
                                       "T1_image": list(B)})
                worst_d = max(worst_d, _hausdorff(A, B))
                lb = B[1] - B[0]
                worst_r = max(worst_r, (A[1] - A[0]) / lb if lb > 0 else np.inf)
                key = (_key(A), _key(B))
                if key in nxt:
                    nxt[key][2] += count
                else:
                    nxt[key] = [A, B, count, w]
        states = nxt
        if len(states) > MAX_STATES:
            raise CellCountExceeded(f"more than {MAX_STATES} image pairs at depth {depth}")
        dist.append(worst_d)
        ratio.append(worst_r)
    n0 = sum(c for _, _, c, _ in states.values())
    n1 = count_words(T1, m)[-1]
    return NestedReport(m, not violations, n0, n1, violations, dist, ratio,
                        len(states))


def correspondence(T0, T1, m):
    """The word-indexed map from depth-``m`` cylinders of T0 to those of T1."""
    c0, c1 = cylinder_table(T0, m), cylinder_table(T1, m)
    return {w: (cell, c1.cells.get(w)) for w, cell in c0.cells.items()}


def sampled_itineraries(T, m, n):
    """Itineraries of ``n`` uniform grid points (a brute-force oracle)."""
    lo, hi = T.domain
    xs = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    found = defaultdict(int)
    for x in xs:
        try:
            found[itinerary(T, float(x), m)] += 1
        except OrbitTruncated:
            continue
    return dict(found)
