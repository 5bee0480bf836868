"""Finite unions of disjoint open intervals."""

from __future__ import annotations

from dataclasses import dataclass

from .config import TOL


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, disjoint open intervals; neighbours closer than ``tol`` merge.

    Merging two intervals separated by a single point (or a gap below the
    merge tolerance) drops that point, which is harmless here: all set
    comparisons in this package are modulo finite sets.
    """

    intervals: tuple = ()

    @classmethod
    def from_intervals(cls, pieces, tol=None):
        tol = TOL.merge if tol is None else tol
        items = sorted((float(lo), float(hi)) for lo, hi in pieces if hi - lo > tol)
        merged = []
        for lo, hi in items:
            if merged and lo <= merged[-1][1] + tol:
                if hi > merged[-1][1]:
                    merged[-1] = (merged[-1][0], hi)
            else:
                merged.append((lo, hi))
        return cls(tuple(merged))

    @classmethod
    def empty(cls):
        return cls(())

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    @property
    def length(self):
        return sum(hi - lo for lo, hi in self.intervals)

    def union(self, other, tol=None):
        return IntervalUnion.from_intervals(self.intervals + tuple(other), tol)

    __or__ = union

    def intersect_interval(self, lo, hi):
        out = []
        for a, b in self.intervals:
            left, right = max(a, lo), min(b, hi)
            if right > left:
                out.append((left, right))
        return IntervalUnion(tuple(out))

    def contains_interval(self, lo, hi, slack=None):
        """True when ``(lo, hi)`` lies inside one component, up to ``slack``."""
        slack = TOL.containment if slack is None else slack
        return any(a <= lo + slack and hi - slack <= b for a, b in self.intervals)

    def issubset(self, other, slack=None):
        return all(other.contains_interval(lo, hi, slack) for lo, hi in self.intervals)

    def complement(self, lo=-1.0, hi=1.0):
        """Open gaps of ``(lo, hi)`` not covered by the union."""
        gaps = []
        cursor = lo
        for a, b in self.intervals:
            if a > cursor:
                gaps.append((cursor, min(a, hi)))
            cursor = max(cursor, b)
        if cursor < hi:
            gaps.append((cursor, hi))
        return IntervalUnion(tuple(g for g in gaps if g[1] > g[0]))

    def hausdorff(self, other):
        """Hausdorff distance between the closures; ``inf`` if one is empty."""
        if not self.intervals or not other.intervals:
            return 0.0 if not self.intervals and not other.intervals else float("inf")
        return max(_directed(self, other), _directed(other, self))


def _distance(p, v):
    return min(0.0 if a <= p <= b else min(abs(p - a), abs(p - b))
               for a, b in v.intervals)


def _directed(u, v):
    # the distance to v is piecewise linear; its maxima over a closed interval
    # sit at the endpoints or at midpoints of gaps between components of v
    comps = v.intervals
    mids = [0.5 * (comps[i][1] + comps[i + 1][0]) for i in range(len(comps) - 1)]
    worst = 0.0
    for lo, hi in u.intervals:
        for p in [lo, hi] + [m for m in mids if lo < m < hi]:
            worst = max(worst, _distance(p, v))
    return worst
