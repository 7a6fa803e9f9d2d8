"""Interval polynomials and polynomial enclosures of univariate graphs.

An interval polynomial ``P = (P_0, ..., P_k)`` over a set ``Z`` of offsets
represents the set-valued map ``z -> sum_i P_i z^i``. Products and powers are
truncated to degree ``k``: every term of degree ``>= k`` is folded into the
last coefficient through :func:`range_bound`, using ``z^j = z^k z^(j-k)``.

:func:`autobound_1d` propagates a degree-k enclosure through an expression
graph in one forward pass. The result ``P`` satisfies
``f(x) in sum_i P_i (x - x0)^i`` for every ``x`` in the trust region.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .atomic import image, sharp_atomic_enclosure
from .exprgraph import AtomicFn, Kind, is_nonneg_int, parse
from .interval import (
    ONE,
    ZERO,
    Interval,
    Rounding,
    add_hi,
    add_lo,
    iv_add,
    iv_hull,
    iv_intersect,
    iv_mul,
    iv_neg,
    iv_pow,
    iv_scale,
    midpoint,
)


@dataclass(frozen=True)
class IntervalPolynomial:
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(Interval.coerce(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("an interval polynomial needs at least one coefficient")

    @classmethod
    def of(cls, *coeffs) -> "IntervalPolynomial":
        return cls(tuple(coeffs))

    @classmethod
    def constant(cls, c, k: int = 0) -> "IntervalPolynomial":
        return cls((Interval.coerce(c),) + (ZERO,) * k)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, i) -> Interval:
        return self.coeffs[i]

    def __iter__(self):
        return iter(self.coeffs)

    def padded(self, k: int) -> "IntervalPolynomial":
        if len(self.coeffs) >= k + 1:
            return self
        return IntervalPolynomial(self.coeffs + (ZERO,) * (k + 1 - len(self.coeffs)))

    def at(self, z: float, rounding: Rounding = Rounding.FAST) -> Interval:
        """The interval ``sum_i P_i z^i`` at a real offset ``z``."""
        zi = Interval(z, z)
        return range_bound(self, zi, rounding)

    def contains(self, other: "IntervalPolynomial") -> bool:
        a, b = self.padded(other.degree), other.padded(self.degree)
        return all(x.lo <= y.lo and y.hi <= x.hi for x, y in zip(a.coeffs, b.coeffs))

    def __repr__(self):
        parts = []
        for c in self.coeffs:
            parts.append(repr(c.lo) if c.is_point else f"[{c.lo!r}, {c.hi!r}]")
        return f"IntervalPolynomial({', '.join(parts)})"


def _poly(x) -> IntervalPolynomial:
    if isinstance(x, IntervalPolynomial):
        return x
    return IntervalPolynomial(tuple(x))


def range_bound(P, Z: Interval, rounding: Rounding = Rounding.FAST) -> Interval:
    """Interval containing ``sum_i P_i z^i`` for all ``z`` in ``Z``."""
    P = _poly(P)
    Z = Interval.coerce(Z)
    total = P.coeffs[0]
    for i in range(1, len(P.coeffs)):
        c = P.coeffs[i]
        if c == ZERO:
            continue
        total = iv_add(total, iv_mul(c, iv_pow(Z, i, rounding), rounding), rounding)
    return total


def poly_add(A, B, rounding: Rounding = Rounding.FAST) -> IntervalPolynomial:
    A, B = _poly(A), _poly(B)
    n = max(len(A), len(B))
    A, B = A.padded(n - 1), B.padded(n - 1)
    return IntervalPolynomial(tuple(iv_add(a, b, rounding) for a, b in zip(A, B)))


def poly_negate(A) -> IntervalPolynomial:
    return IntervalPolynomial(tuple(iv_neg(a) for a in _poly(A)))


def poly_sub(A, B, rounding: Rounding = Rounding.FAST) -> IntervalPolynomial:
    return poly_add(A, poly_negate(B), rounding)


def poly_scale(c: Interval, A, rounding: Rounding = Rounding.FAST) -> IntervalPolynomial:
    c = Interval.coerce(c)
    return IntervalPolynomial(tuple(iv_mul(c, a, rounding) for a in _poly(A)))


def poly_add_const(A, c: float, rounding: Rounding = Rounding.FAST) -> IntervalPolynomial:
    A = _poly(A)
    return IntervalPolynomial((iv_add(A[0], Interval(c, c), rounding),) + A.coeffs[1:])


def _fold(low, high, Z, k, rounding) -> IntervalPolynomial:
    """Assemble coefficients ``< k`` with the range-bounded tail at degree ``k``."""
    coeffs = list(low)
    if high:
        coeffs.append(range_bound(IntervalPolynomial(tuple(high)), Z, rounding))
    else:
        coeffs.append(ZERO)
    return IntervalPolynomial(tuple(coeffs))


def _accumulate(bucket: list, idx: int, term: Interval, rounding):
    while len(bucket) <= idx:
        bucket.append(ZERO)
    bucket[idx] = iv_add(bucket[idx], term, rounding)


def poly_mul(A, B, Z: Interval, k: int, rounding: Rounding = Rounding.FAST) -> IntervalPolynomial:
    """Product truncated to degree ``k``.

    Coefficient ``j < k`` is ``sum_{i+l=j} A_i B_l``; coefficient ``k`` is
    ``range_bound(sum_{i+l>=k} A_i B_l z^(i+l-k), Z)``.
    """
    A, B = _poly(A), _poly(B)
    Z = Interval.coerce(Z)
    low = [ZERO] * k
    high: list = []
    for i, a in enumerate(A):
        if a == ZERO:
            continue
        for l, b in enumerate(B):
            if b == ZERO:
                continue
            t = iv_mul(a, b, rounding)
            if i + l < k:
                low[i + l] = iv_add(low[i + l], t, rounding)
            else:
                _accumulate(high, i + l - k, t, rounding)
    return _fold(low, high, Z, k, rounding)


def compositions(p: int, m: int):
    """All ``(n_0, ..., n_{m-1})`` of nonnegative integers summing to ``p``, lexicographically."""
    if m == 1:
        yield (p,)
        return
    for first in range(p, -1, -1):
        for rest in compositions(p - first, m - 1):
            yield (first,) + rest


def multinomial(p: int, ns) -> float:
    out = math.factorial(p)
    for n in ns:
        out //= math.factorial(n)
    return float(out)


def poly_pow(A, p: int, Z: Interval, k: int, rounding: Rounding = Rounding.FAST) -> IntervalPolynomial:
    """``A(z)^p`` truncated to degree ``k`` by direct multinomial expansion.

    Each term ``prod_j A_j^(n_j)`` uses the exact interval power, which is
    never looser (and for sign-indefinite coefficients tighter) than
    multiplying copies of ``A_j``.
    """
    A = _poly(A)
    Z = Interval.coerce(Z)
    if not is_nonneg_int(p):
        raise ValueError(f"poly_pow needs an integer exponent >= 0, got {p!r}")
    if p == 0:
        return IntervalPolynomial.constant(ONE, k) if k >= 1 else IntervalPolynomial((ONE,))
    low = [ZERO] * k
    high: list = []
    nz = [j for j, a in enumerate(A) if a != ZERO]
    if not nz:
        return _fold(low, high, Z, k, rounding)
    for ns in compositions(p, len(nz)):
        term = None
        deg = 0
        for j, n in zip(nz, ns):
            if n == 0:
                continue
            f = iv_pow(A[j], n, rounding)
            term = f if term is None else iv_mul(term, f, rounding)
            deg += j * n
        c = multinomial(p, ns)
        if c != 1.0:
            term = iv_scale(c, term, rounding)
        if deg < k:
            low[deg] = iv_add(low[deg], term, rounding)
        else:
            _accumulate(high, deg - k, term, rounding)
    return _fold(low, high, Z, k, rounding)


def poly_compose(A, B, Z: Interval, k: int, rounding: Rounding = Rounding.FAST) -> IntervalPolynomial:
    """``A o B`` truncated to degree ``k``: the sum over ``i`` of ``A_i * B(z)^i``.

    Each power ``B^i`` is expanded and folded on its own before being scaled by
    ``A_i``. Factoring ``A_i`` out of the fold is never looser than folding the
    scaled terms, by subdistributivity. ``B`` normally has ``B_0 = 0``; a small
    interval ``B_0`` (from outward rounding) is also accepted.
    """
    A, B = _poly(A), _poly(B)
    Z = Interval.coerce(Z)
    out = IntervalPolynomial.constant(A[0], k)
    for i in range(1, len(A)):
        if A[i] == ZERO:
            continue
        term = poly_scale(A[i], poly_pow(B, i, Z, k, rounding), rounding)
        out = poly_add(out, term, rounding)
    return out


# ---------------------------------------------------------------------------
# enclosures

@dataclass(frozen=True)
class TaylorEnclosure1D:
    """``f(x) in sum_i poly_i (x - x0)^i`` for all ``x`` in ``trust``."""

    x0: float
    trust: Interval
    poly: IntervalPolynomial

    @property
    def degree(self) -> int:
        return self.poly.degree

    @property
    def coeffs(self):
        return self.poly.coeffs

    @property
    def remainder(self) -> Interval:
        return self.poly.coeffs[-1]

    @property
    def offsets(self) -> Interval:
        return Interval(self.trust.lo - self.x0, self.trust.hi - self.x0)

    def bound_at(self, x: float, rounding: Rounding = Rounding.FAST) -> Interval:
        """Interval guaranteed to contain ``f(x)``."""
        rounding = Rounding.parse(rounding)
        if rounding is Rounding.FAST:
            return self.poly.at(x - self.x0, rounding)
        # x - x0 itself may round
        z = Interval(add_lo(x, -self.x0, rounding), add_hi(x, -self.x0, rounding))
        return range_bound(self.poly, z, rounding)

    def range(self, rounding: Rounding = Rounding.FAST) -> Interval:
        return range_bound(self.poly, self.offsets, rounding)

    def to_json(self) -> dict:
        coeffs = []
        for i, c in enumerate(self.poly.coeffs):
            if c.is_point and i < self.degree:
                coeffs.append(c.to_json()["lo"])
            else:
                coeffs.append(c.to_json())
        return {"x0": self.x0, "trust": self.trust.to_json(), "coeffs": coeffs}

    @classmethod
    def from_json(cls, obj) -> "TaylorEnclosure1D":
        return cls(float(obj["x0"]), Interval.from_json(obj["trust"]),
                   IntervalPolynomial(tuple(Interval.from_json(c) for c in obj["coeffs"])))


@dataclass
class Trace1D:
    """Per-variable enclosures and ranges from one forward pass."""

    polys: list = field(default_factory=list)
    ranges: list = field(default_factory=list)


def _offsets(x0: float, trust: Interval, rounding: Rounding) -> Interval:
    return Interval(add_lo(trust.lo, -x0, rounding), add_hi(trust.hi, -x0, rounding))


def _expansion_point(P: IntervalPolynomial, rounding: Rounding, index: int):
    c0 = P[0]
    if c0.is_point:
        return c0.lo
    if rounding is Rounding.OUTWARD:
        return midpoint(c0)
    raise ValueError(f"equation {index}: argument of a nonlinear function has a non-scalar constant term {c0}")


def nonlinear_extension(fn: AtomicFn, P: IntervalPolynomial, Yarg: Interval, Z: Interval, k: int,
                        rounding: Rounding = Rounding.FAST, index: int | None = None) -> IntervalPolynomial:
    """Enclosure of ``fn(P(z))``: the atomic enclosure at ``P_0`` composed with ``P - P_0``."""
    y0 = _expansion_point(P, rounding, index)
    if not Yarg.lo <= y0 <= Yarg.hi:
        Yarg = iv_hull(Yarg, Interval(y0, y0))
    T = IntervalPolynomial(tuple(sharp_atomic_enclosure(fn, k, y0, Yarg, rounding)))
    shift = iv_add(P[0], Interval(-y0, -y0), rounding)
    B = IntervalPolynomial((shift,) + P.coeffs[1:])
    return poly_compose(T, B, Z, k, rounding)


def autobound_1d(g, x0: float, trust, k: int, rounding: Rounding | str = Rounding.FAST,
                 trace: Trace1D | None = None) -> TaylorEnclosure1D:
    """Degree-``k`` polynomial enclosure of a univariate graph over ``trust``.

    Args:
        g: An :class:`ExprGraph` with one scalar input, or an expression string.
        x0: Expansion point; must lie in ``trust``.
        trust: The trust region ``[a, b]``.
        k: Degree of the enclosure, at least 1.
        rounding: ``"fast"`` or ``"outward"``.
        trace: Optional :class:`Trace1D` that receives every intermediate.
    """
    if isinstance(g, str):
        g = parse(g)
    rounding = Rounding.parse(rounding)
    trust = Interval.coerce(trust)
    x0 = float(x0)
    if not is_nonneg_int(k) or k < 1:
        raise ValueError(f"degree must be an integer >= 1, got {k!r}")
    if g.num_inputs != 1 or g.input_shape is not None:
        raise ValueError("autobound_1d needs a graph with a single scalar input")
    if not trust.lo <= x0 <= trust.hi:
        raise ValueError(f"x0={x0} is outside the trust region {trust}")
    if not (math.isfinite(trust.lo) and math.isfinite(trust.hi)):
        raise ValueError("the trust region must be bounded")
    Z = _offsets(x0, trust, rounding)
    P = [IntervalPolynomial((Interval(x0, x0), ONE) + (ZERO,) * (k - 1))]
    Y = [trust]
    for idx, eq in enumerate(g.equations):
        fn = eq.fn
        args = [P[a] for a in eq.args]
        yargs = [Y[a] for a in eq.args]
        kind = fn.kind
        if kind is Kind.CONST:
            c = float(fn.param)
            Pi = IntervalPolynomial.constant(Interval(c, c), k)
            Yi0 = Interval(c, c)
        elif kind is Kind.ADD:
            Pi = poly_add(args[0], args[1], rounding)
            Yi0 = iv_add(yargs[0], yargs[1], rounding)
        elif kind is Kind.MUL:
            Pi = poly_mul(args[0], args[1], Z, k, rounding)
            Yi0 = iv_mul(yargs[0], yargs[1], rounding)
        elif kind is Kind.ADD_CONST:
            Pi = poly_add_const(args[0], fn.param, rounding)
            Yi0 = image(fn, yargs[0], rounding)
        elif kind is Kind.MUL_CONST:
            Pi = poly_scale(Interval(fn.param, fn.param), args[0], rounding)
            Yi0 = image(fn, yargs[0], rounding)
        elif kind is Kind.NEGATE:
            Pi = poly_negate(args[0])
            Yi0 = image(fn, yargs[0], rounding)
        elif kind is Kind.POW and is_nonneg_int(fn.param):
            Pi = poly_pow(args[0], fn.param, Z, k, rounding)
            Yi0 = iv_pow(yargs[0], fn.param, rounding)
        elif kind is Kind.BILINEAR:
            raise ValueError(f"equation {idx}: bilinear operations need the tensor engine")
        else:
            Pi = nonlinear_extension(fn, args[0], yargs[0], Z, k, rounding, idx)
            Yi0 = image(fn, yargs[0], rounding)
        Yi = iv_intersect(Yi0, range_bound(Pi, Z, rounding))
        P.append(Pi)
        Y.append(Yi)
    if trace is not None:
        trace.polys = P
        trace.ranges = Y
    return TaylorEnclosure1D(x0, trust, P[-1])


def timed_autobound_1d(g, x0, trust, k, rounding=Rounding.FAST, repeats: int = 5):
    """Best-of-``repeats`` wall time in seconds together with the enclosure."""
    if isinstance(g, str):
        g = parse(g)
    best, enc = math.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        enc = autobound_1d(g, x0, trust, k, rounding)
        best = min(best, time.perf_counter() - t0)
    return best, enc
