"""Closed real intervals with selectable rounding.

Endpoints may be infinite. NaN endpoints are rejected at construction, and the
operations below never produce them: ``0 * inf`` endpoint products resolve to
``0``, which is the correct limit for products of closed sets of reals.

Two rounding behaviours are offered:

* ``Rounding.FAST`` computes endpoints with ordinary round-to-nearest floating
  point. Results are accurate to a few ulps but not rigorous.
* ``Rounding.OUTWARD`` moves each computed endpoint one ulp outward unless the
  floating-point result is known to be exact (sums and products are checked
  with error-free transformations). Elementary functions are nudged
  unconditionally, which is rigorous as long as libm is accurate to one ulp.

The rounding mode is always passed explicitly; there is no global state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

INF = math.inf


class Rounding(enum.Enum):
    FAST = "fast"
    OUTWARD = "outward"

    @classmethod
    def parse(cls, value: "Rounding | str | None") -> "Rounding":
        if value is None:
            return cls.FAST
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown rounding mode {value!r}; expected 'fast' or 'outward'") from None


class EmptyIntersectionError(ArithmeticError):
    """Two enclosures that should overlap turned out disjoint.

    This only happens when some upstream enclosure was unsound, so it is
    treated as an internal consistency failure rather than a user error.
    """


@dataclass(frozen=True)
class Interval:
    """The closed interval ``[lo, hi]``."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValueError(f"empty interval: lo={lo!r} > hi={hi!r}")
        if lo == INF or hi == -INF:
            raise ValueError("interval must contain at least one real number")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def entire(cls) -> "Interval":
        return cls(-INF, INF)

    @classmethod
    def coerce(cls, x) -> "Interval":
        """Accept an Interval, a real, or a ``(lo, hi)`` pair."""
        if isinstance(x, Interval):
            return x
        if isinstance(x, (tuple, list)) and len(x) == 2:
            return cls(x[0], x[1])
        return cls(x, x)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def __contains__(self, x) -> bool:
        return contains(self, x)

    # Operator sugar always uses round-to-nearest; library code calls the
    # module functions with an explicit rounding argument instead.
    def __add__(self, other):
        return iv_add(self, Interval.coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return iv_sub(self, Interval.coerce(other))

    def __rsub__(self, other):
        return iv_sub(Interval.coerce(other), self)

    def __mul__(self, other):
        return iv_mul(self, Interval.coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return iv_neg(self)

    def __pow__(self, p: int):
        return iv_pow(self, p)

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    def to_json(self) -> dict:
        return {"lo": _real_to_json(self.lo), "hi": _real_to_json(self.hi)}

    @classmethod
    def from_json(cls, obj) -> "Interval":
        if isinstance(obj, (int, float, str)):
            v = _real_from_json(obj)
            return cls(v, v)
        return cls(_real_from_json(obj["lo"]), _real_from_json(obj["hi"]))


ZERO = Interval(0.0, 0.0)
ONE = Interval(1.0, 1.0)


def _real_to_json(x: float):
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return x


def _real_from_json(x) -> float:
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return INF
        if s in ("-inf", "-infinity"):
            return -INF
        raise ValueError(f"bad real value {x!r}")
    return float(x)


# ---------------------------------------------------------------------------
# directed rounding primitives

def _down(x: float) -> float:
    return math.nextafter(x, -INF)


def _up(x: float) -> float:
    return math.nextafter(x, INF)


def _two_sum_err(a: float, b: float, s: float) -> float:
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def add_lo(a: float, b: float, rounding: Rounding) -> float:
    s = a + b
    if rounding is Rounding.FAST:
        return s
    if math.isinf(s):
        if math.isfinite(a) and math.isfinite(b) and s > 0:
            return _down(s)
        return s
    return s if _two_sum_err(a, b, s) >= 0 else _down(s)


def add_hi(a: float, b: float, rounding: Rounding) -> float:
    s = a + b
    if rounding is Rounding.FAST:
        return s
    if math.isinf(s):
        if math.isfinite(a) and math.isfinite(b) and s < 0:
            return _up(s)
        return s
    return s if _two_sum_err(a, b, s) <= 0 else _up(s)


_SPLIT = 134217729.0  # 2**27 + 1


def _two_prod_err(a: float, b: float, p: float) -> float | None:
    """Exact residual ``a*b - p``, or None when splitting could overflow."""
    if abs(a) > 1e290 or abs(b) > 1e290 or (p != 0.0 and abs(p) < 1e-290):
        return None
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _mul(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


def mul_lo(a: float, b: float, rounding: Rounding) -> float:
    p = _mul(a, b)
    if rounding is Rounding.FAST or p == 0.0 or math.isinf(a) or math.isinf(b):
        return p
    if math.isinf(p):
        return _down(p) if p > 0 else p
    err = _two_prod_err(a, b, p)
    if err is None or err < 0:
        return _down(p)
    return p


def mul_hi(a: float, b: float, rounding: Rounding) -> float:
    p = _mul(a, b)
    if rounding is Rounding.FAST or p == 0.0 or math.isinf(a) or math.isinf(b):
        return p
    if math.isinf(p):
        return _up(p) if p < 0 else p
    err = _two_prod_err(a, b, p)
    if err is None or err > 0:
        return _up(p)
    return p


def widen(lo: float, hi: float, rounding: Rounding) -> Interval:
    """Interval from endpoints of an inexact computation (nudged if OUTWARD)."""
    if rounding is Rounding.OUTWARD:
        lo, hi = _down(lo), _up(hi)
    return Interval(lo, hi)


# ---------------------------------------------------------------------------
# arithmetic

def iv_add(a: Interval, b: Interval, rounding: Rounding = Rounding.FAST) -> Interval:
    return Interval(add_lo(a.lo, b.lo, rounding), add_hi(a.hi, b.hi, rounding))


def iv_neg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def iv_sub(a: Interval, b: Interval, rounding: Rounding = Rounding.FAST) -> Interval:
    return Interval(add_lo(a.lo, -b.hi, rounding), add_hi(a.hi, -b.lo, rounding))


def iv_mul(a: Interval, b: Interval, rounding: Rounding = Rounding.FAST) -> Interval:
    if a.is_point and b.is_point and rounding is Rounding.FAST:
        p = _mul(a.lo, b.lo)
        return Interval(p, p)
    pairs = ((a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi))
    lo = min(mul_lo(x, y, rounding) for x, y in pairs)
    hi = max(mul_hi(x, y, rounding) for x, y in pairs)
    return Interval(lo, hi)


def iv_scale(c: float, a: Interval, rounding: Rounding = Rounding.FAST) -> Interval:
    """Multiply by the real ``c``."""
    return iv_mul(Interval(c, c), a, rounding)


def _pow_endpoint(x: float, p: int, direction: int, rounding: Rounding) -> float:
    if p == 1:
        return x
    # x*x is correctly rounded; libm pow need not be
    r = x * x if p == 2 else x ** p
    if rounding is Rounding.FAST or x in (0.0, 1.0, -1.0) or math.isinf(x):
        return r
    return _down(r) if direction < 0 else _up(r)


def iv_pow(a: Interval, p: int, rounding: Rounding = Rounding.FAST) -> Interval:
    """Exact range of ``x**p`` over ``a`` for an integer ``p >= 0``."""
    if isinstance(p, float) and p.is_integer():
        p = int(p)
    if not isinstance(p, int) or isinstance(p, bool) or p < 0:
        raise ValueError(f"iv_pow needs an integer exponent >= 0, got {p!r}")
    if p == 0:
        return ONE
    if p % 2 == 1 or a.lo >= 0:
        return Interval(_pow_endpoint(a.lo, p, -1, rounding), _pow_endpoint(a.hi, p, 1, rounding))
    if a.hi <= 0:
        return Interval(_pow_endpoint(a.hi, p, -1, rounding), _pow_endpoint(a.lo, p, 1, rounding))
    m = max(-a.lo, a.hi)
    return Interval(0.0, _pow_endpoint(m, p, 1, rounding))


def iv_intersect(a: Interval, b: Interval) -> Interval:
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    if lo > hi:
        raise EmptyIntersectionError(f"disjoint enclosures {a} and {b}")
    return Interval(lo, hi)


def iv_hull(a: Interval, b: Interval) -> Interval:
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def iv_sum(items, rounding: Rounding = Rounding.FAST) -> Interval:
    total = ZERO
    for it in items:
        total = iv_add(total, it, rounding)
    return total


def midpoint(a: Interval) -> float:
    if a.lo == -INF and a.hi == INF:
        return 0.0
    if math.isinf(a.lo) or math.isinf(a.hi):
        return a.hi if math.isinf(a.lo) else a.lo
    m = 0.5 * a.lo + 0.5 * a.hi
    return min(max(m, a.lo), a.hi)


def radius(a: Interval) -> float:
    return 0.5 * (a.hi - a.lo)


def width(a: Interval) -> float:
    return a.hi - a.lo


def magnitude(a: Interval) -> float:
    return max(abs(a.lo), abs(a.hi))


def contains(a: Interval, x) -> bool:
    if isinstance(x, Interval):
        return a.lo <= x.lo and x.hi <= a.hi
    return a.lo <= x <= a.hi
