"""Closed intervals with exact rational endpoints."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Sequence, Union

Number = Union[int, Fraction]


def as_fraction(value: Number | str) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass an int, Fraction or decimal string")
    return Fraction(value)


@dataclass(frozen=True)
class Interval:
    """The closed interval ``[lo, hi]``; both endpoints are exact rationals."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value: Number) -> Interval:
        v = as_fraction(value)
        return cls(v, v)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, value: object) -> bool:
        if isinstance(value, Interval):
            return self.lo <= value.lo and value.hi <= self.hi
        return self.lo <= value <= self.hi  # type: ignore[operator]

    def __add__(self, other: Interval | Number) -> Interval:
        return interval_add(self, _lift(other))

    __radd__ = __add__

    def __sub__(self, other: Interval | Number) -> Interval:
        o = _lift(other)
        return Interval(self.lo - o.hi, self.hi - o.lo)

    def __rsub__(self, other: Number) -> Interval:
        return _lift(other) - self

    def __mul__(self, other: Interval | Number) -> Interval:
        return interval_mul(self, _lift(other))

    __rmul__ = __mul__

    def intersect(self, other: Interval) -> Interval:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise ValueError(f"{self} and {other} are disjoint")
        return Interval(lo, hi)

    def hull(self, other: Interval) -> Interval:
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def clamp_lo(self, floor: Number) -> Interval:
        f = as_fraction(floor)
        return Interval(max(self.lo, f), max(self.hi, f))

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"

    def render(self, digits: int = 4) -> str:
        return f"[{render_decimal(self.lo, digits)}, {render_decimal(self.hi, digits)}]"


def _lift(value: Interval | Number) -> Interval:
    return value if isinstance(value, Interval) else Interval.point(value)


def interval_add(a: Interval, b: Interval) -> Interval:
    return Interval(a.lo + b.lo, a.hi + b.hi)


def interval_mul(a: Interval, b: Interval) -> Interval:
    products = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return Interval(min(products), max(products))


def interval_sum(items: Iterable[Interval]) -> Interval:
    total = Interval.point(0)
    for item in items:
        total = total + item
    return total


def interval_argmax_set(intervals: Sequence[Interval]) -> frozenset[int]:
    """Indices that may hold the maximum.

    The greatest lower bound ``glb`` is the largest ``lo``; index ``i`` is kept
    when ``hi >= glb``.  Ties are kept.
    """
    if not intervals:
        raise ValueError("argmax of an empty vector")
    glb = max(iv.lo for iv in intervals)
    return frozenset(i for i, iv in enumerate(intervals) if iv.hi >= glb)


def tie_broken_argmax_set(intervals: Sequence[Interval]) -> frozenset[int]:
    """Like :func:`interval_argmax_set` for a learner that breaks ties toward the lowest index.

    ``i`` survives only if its upper bound beats every earlier lower bound
    strictly and reaches every later one.
    """
    if not intervals:
        raise ValueError("argmax of an empty vector")
    return frozenset(
        i
        for i, iv in enumerate(intervals)
        if all(iv.hi > o.lo for o in intervals[:i]) and all(iv.hi >= o.lo for o in intervals[i + 1 :])
    )


def render_decimal(value: Fraction, digits: int = 4) -> str:
    """Round-half-even decimal rendering, for display only."""
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(value.numerator) / Decimal(value.denominator)
        q = Decimal(1).scaleb(-digits)
        return str(d.quantize(q, rounding=ROUND_HALF_EVEN))
