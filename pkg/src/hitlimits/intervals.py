"""Intervals and finite unions of intervals inside the unit interval.

Endpoints may be floats or :class:`fractions.Fraction`; mixing is allowed and
arithmetic stays exact as long as both operands are rational.  Set algebra is
exact on endpoints, while inclusion tests are taken modulo Lebesgue measure
with an explicit tolerance.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Iterable, Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class Interval:
    """Interval with independently open or closed endpoints."""

    lo: Real
    hi: Real
    closed_lo: bool = True
    closed_hi: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"interval with lo > hi: [{self.lo}, {self.hi}]")

    @property
    def is_empty(self) -> bool:
        return self.lo == self.hi and not (self.closed_lo and self.closed_hi)

    def length(self) -> Real:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.closed_lo:
            return False
        if x == self.hi and not self.closed_hi:
            return False
        return True

    def intersect(self, other: "Interval") -> "Interval | None":
        if self.lo > other.lo:
            lo, clo = self.lo, self.closed_lo
        elif self.lo < other.lo:
            lo, clo = other.lo, other.closed_lo
        else:
            lo, clo = self.lo, self.closed_lo and other.closed_lo
        if self.hi < other.hi:
            hi, chi = self.hi, self.closed_hi
        elif self.hi > other.hi:
            hi, chi = other.hi, other.closed_hi
        else:
            hi, chi = self.hi, self.closed_hi and other.closed_hi
        if lo > hi:
            return None
        out = Interval(lo, hi, clo, chi)
        return None if out.is_empty else out

    def midpoint(self) -> float:
        return float(self.lo) + 0.5 * float(self.hi - self.lo)

    def __repr__(self) -> str:
        left = "[" if self.closed_lo else "("
        right = "]" if self.closed_hi else ")"
        return f"{left}{float(self.lo):.17g}, {float(self.hi):.17g}{right}"


UNIT = Interval(0, 1, True, False)


def _touch_merges(a: Interval, b: Interval) -> bool:
    """Whether ``a`` (sorted before ``b``) overlaps or abuts ``b`` without a gap point."""
    if b.lo < a.hi:
        return True
    if b.lo == a.hi:
        return a.closed_hi or b.closed_lo
    return False


class IntervalSet:
    """Sorted, pairwise disjoint union of nonempty intervals."""

    __slots__ = ("components",)

    def __init__(self, intervals: Iterable[Interval] = ()):
        items = sorted(
            (iv for iv in intervals if iv is not None and not iv.is_empty),
            key=lambda iv: (iv.lo, not iv.closed_lo),
        )
        merged: list[Interval] = []
        for iv in items:
            if merged and _touch_merges(merged[-1], iv):
                last = merged[-1]
                if iv.hi > last.hi:
                    hi, chi = iv.hi, iv.closed_hi
                elif iv.hi < last.hi:
                    hi, chi = last.hi, last.closed_hi
                else:
                    hi, chi = last.hi, last.closed_hi or iv.closed_hi
                merged[-1] = Interval(last.lo, hi, last.closed_lo, chi)
            else:
                merged.append(iv)
        self.components: tuple[Interval, ...] = tuple(merged)

    @classmethod
    def of(cls, lo, hi, closed_lo=True, closed_hi=False) -> "IntervalSet":
        return cls([Interval(lo, hi, closed_lo, closed_hi)])

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __bool__(self) -> bool:
        return bool(self.components)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self) -> str:
        if not self.components:
            return "IntervalSet(∅)"
        return "IntervalSet(" + " ∪ ".join(map(repr, self.components)) + ")"

    def __contains__(self, x) -> bool:
        lows = [iv.lo for iv in self.components]
        i = bisect.bisect_right(lows, x) - 1
        return i >= 0 and x in self.components[i]

    def total_length(self) -> Real:
        return sum((iv.length() for iv in self.components), 0)

    @property
    def lo(self):
        return self.components[0].lo

    @property
    def hi(self):
        return self.components[-1].hi

    def intersect(self, other: "IntervalSet | Interval") -> "IntervalSet":
        if isinstance(other, Interval):
            other = IntervalSet([other])
        out = []
        a, b = self.components, other.components
        i = j = 0
        while i < len(a) and j < len(b):
            piece = a[i].intersect(b[j])
            if piece is not None:
                out.append(piece)
            if a[i].hi < b[j].hi or (a[i].hi == b[j].hi and not a[i].closed_hi):
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.components + other.components)

    def complement(self, within: Interval = UNIT) -> "IntervalSet":
        gaps = []
        lo, clo = within.lo, within.closed_lo
        for iv in self.components:
            if iv.lo > lo or (iv.lo == lo and clo and not iv.closed_lo):
                gaps.append(Interval(lo, iv.lo, clo, not iv.closed_lo))
            lo, clo = iv.hi, not iv.closed_hi
        if within.hi > lo or (within.hi == lo and clo and within.closed_hi):
            gaps.append(Interval(lo, within.hi, clo, within.closed_hi))
        return IntervalSet(gaps).intersect(within)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        if not self:
            return self
        hull = Interval(min(self.lo, 0), max(self.hi, 1), True, True)
        return self.intersect(other.complement(hull))

    def issubset(self, other: "IntervalSet", tol: float = 0.0) -> bool:
        """Inclusion modulo Lebesgue measure: ``λ(self \\ other) <= tol``."""
        if not self:
            return True
        return float(self.difference(other).total_length()) <= tol

    def approx_equal(self, other: "IntervalSet", tol: float = 0.0) -> bool:
        return self.issubset(other, tol) and other.issubset(self, tol)

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Float endpoint arrays and closure flags, as consumed by the kernels."""
        lo = np.array([float(iv.lo) for iv in self.components], dtype=np.float64)
        hi = np.array([float(iv.hi) for iv in self.components], dtype=np.float64)
        clo = np.array([iv.closed_lo for iv in self.components], dtype=np.bool_)
        chi = np.array([iv.closed_hi for iv in self.components], dtype=np.bool_)
        return lo, hi, clo, chi


def dyadic(k: int) -> Fraction:
    return Fraction(1, 2**k)


def as_interval_set(obj) -> IntervalSet:
    """Coerce an IntervalSet, Interval or ``(lo, hi)`` pair."""
    if isinstance(obj, IntervalSet):
        return obj
    if isinstance(obj, Interval):
        return IntervalSet([obj])
    if isinstance(obj, Sequence) and len(obj) == 2:
        return IntervalSet.of(obj[0], obj[1])
    raise TypeError(f"cannot interpret {obj!r} as an interval set")
