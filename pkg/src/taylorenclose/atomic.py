"""Taylor data and polynomial enclosures for the unary atomic functions.

For a function ``f`` expanded at ``y0`` over ``Y = [a, b]`` the degree-k
enclosure keeps the ordinary Taylor coefficients ``c_0 .. c_{k-1}`` and bounds
the last coefficient by the range of the remainder ratio

    g(y) = (f(y) - sum_{i<k} c_i (y - y0)^i) / (y - y0)^k

over ``Y``. Since ``g'(y)`` is a divided difference of ``f^{(k+1)}``, ``g`` is
monotone whenever ``f^{(k+1)}`` keeps one sign on ``Y``. In that case the
range of ``g`` is spanned by its values at ``a`` and ``b`` and the enclosure is
the tightest possible. Otherwise we fall back to the mean-value bound
``f^{(k)}(Y) / k!``, which is always valid but looser.
"""

from __future__ import annotations

import math

import numpy as np

from .exprgraph import AtomicFn, DomainError, Kind, softplus
from .interval import (
    INF,
    ONE,
    ZERO,
    EmptyIntersectionError,
    Interval,
    Rounding,
    add_hi,
    add_lo,
    iv_add,
    iv_hull,
    iv_intersect,
    iv_mul,
    iv_pow,
    iv_sub,
    widen,
)

_EPS = 2.0 ** -52


def _exponent(fn: AtomicFn):
    if fn.kind is Kind.RECIPROCAL:
        return -1
    return fn.param


def _is_int(p) -> bool:
    return float(p).is_integer()


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _falling(p, n: int) -> float:
    out = 1.0
    for i in range(n):
        out *= p - i
    return out


def _softplus_polys(n: int):
    """Polynomials Q_1..Q_n with softplus^{(m)}(y) = Q_m(sigmoid(y))."""
    polys = [None, np.polynomial.Polynomial([0.0, 1.0])]
    s1ms = np.polynomial.Polynomial([0.0, 1.0, -1.0])
    for _ in range(2, n + 1):
        polys.append(polys[-1].deriv() * s1ms)
    return polys


# ---------------------------------------------------------------------------
# point Taylor coefficients

def check_expansion_point(fn: AtomicFn, y0: float):
    k = fn.kind
    if k is Kind.LOG and not y0 > 0:
        raise DomainError(f"log expanded at the non-positive point {y0!r}")
    if k in (Kind.POW, Kind.RECIPROCAL):
        p = _exponent(fn)
        if p < 0 and y0 == 0:
            raise DomainError(f"power {p} expanded at 0")
        if not _is_int(p) and y0 <= 0:
            raise DomainError(f"fractional power {p} expanded at the non-positive point {y0!r}")


def taylor_coeffs(fn: AtomicFn, y0: float, n: int) -> list[float]:
    """``f^{(i)}(y0) / i!`` for ``i = 0..n``."""
    check_expansion_point(fn, y0)
    k = fn.kind
    if k is Kind.EXP:
        e = math.exp(y0)
        out, t = [], e
        for i in range(n + 1):
            if i:
                t /= i
            out.append(t)
        return out
    if k is Kind.LOG:
        out = [math.log(y0)]
        for i in range(1, n + 1):
            out.append((-1) ** (i - 1) / (i * y0 ** i))
        return out
    if k in (Kind.POW, Kind.RECIPROCAL):
        p = _exponent(fn)
        out, binom = [], 1.0
        for i in range(n + 1):
            if i:
                binom *= (p - (i - 1)) / i
            out.append(0.0 if binom == 0 else binom * _real_pow(y0, p - i))
        return out
    if k is Kind.SOFTPLUS:
        s = sigmoid(y0)
        v = [0.0] + [s / math.factorial(i) if i < 171 else 0.0 for i in range(1, n + 1)]
        w = [softplus(y0)]
        for m in range(1, n + 1):
            acc = sum(j * w[j] * v[m - j] for j in range(1, m))
            w.append(v[m] - acc / m)
        return w
    if k is Kind.RELU:
        if y0 > 0:
            return [y0, 1.0] + [0.0] * (n - 1) if n >= 1 else [y0]
        return [0.0] * (n + 1)
    raise ValueError(f"{fn!r} is not a unary nonlinear function")


def _real_pow(y: float, q) -> float:
    if _is_int(q):
        return y ** int(q)
    return y ** q


def _pad_rel(x: float, i: int, rounding: Rounding) -> Interval:
    """A float result of an O(i)-operation formula, widened under OUTWARD."""
    if rounding is Rounding.FAST or math.isinf(x):
        return Interval(x, x)
    pad = (4 * i + 16) * _EPS * abs(x) + 1e-300
    return widen(x - pad, x + pad, rounding)


def taylor_coeff_intervals(fn: AtomicFn, y0: float, n: int, rounding: Rounding) -> list[Interval]:
    return [_pad_rel(c, i, rounding) for i, c in enumerate(taylor_coeffs(fn, y0, n))]


# ---------------------------------------------------------------------------
# ranges over intervals

def _range_power(Y: Interval, q) -> Interval:
    """Range of ``y**q`` over ``Y`` (real ``q``), allowing infinite results."""
    a, b = Y.lo, Y.hi
    if _is_int(q) and q >= 0:
        return iv_pow(Y, int(q))
    if _is_int(q):
        m = -int(q)
        if a > 0 or b < 0:
            va, vb = a ** q if math.isfinite(a) else 0.0, b ** q if math.isfinite(b) else 0.0
            return Interval(min(va, vb), max(va, vb))
        if m % 2 == 0:
            cands = [abs(v) ** q for v in (a, b) if v != 0 and math.isfinite(v)]
            return Interval(min(cands) if cands else 0.0, INF)
        if a < 0 < b:
            return Interval.entire()
        if a == 0 and b == 0:
            return Interval.entire()
        if a == 0:
            return Interval(b ** q if math.isfinite(b) else 0.0, INF)
        return Interval(-INF, a ** q if math.isfinite(a) else 0.0)
    if a < 0:
        raise DomainError(f"fractional power {q} over an interval reaching negative values")
    if a == 0:
        vb = b ** q if math.isfinite(b) else (INF if q > 0 else 0.0)
        return Interval(0.0, vb) if q > 0 else Interval(vb, INF)
    va = a ** q
    vb = b ** q if math.isfinite(b) else (INF if q > 0 else 0.0)
    return Interval(min(va, vb), max(va, vb))


def _poly_range(poly, lo: float, hi: float) -> Interval:
    cands = [lo, hi]
    for r in poly.deriv().roots():
        if abs(r.imag) < 1e-12 and lo < r.real < hi:
            cands.append(r.real)
    vals = [float(poly(c)) for c in cands]
    scale = max(1.0, float(np.max(np.abs(poly.coef)))) if poly.coef.size else 1.0
    pad = 1e-13 * scale
    return Interval(min(vals) - pad, max(vals) + pad)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return INF


def check_domain(fn: AtomicFn, Y: Interval):
    k = fn.kind
    if k is Kind.LOG and not Y.lo > 0:
        raise DomainError(f"log over {Y}, which reaches non-positive values")
    if k is Kind.POW and not _is_int(fn.param):
        if fn.param > 0 and Y.lo < 0:
            raise DomainError(f"power {fn.param} over {Y}, which reaches negative values")
        if fn.param < 0 and not Y.lo > 0:
            raise DomainError(f"power {fn.param} over {Y}, which reaches non-positive values")


def derivative_range(fn: AtomicFn, n: int, Y: Interval, rounding: Rounding = Rounding.FAST) -> Interval:
    """Enclosure of ``f^{(n)}(Y)`` from closed-form derivatives."""
    check_domain(fn, Y)
    r = _derivative_range_fast(fn, n, Y)
    if rounding is Rounding.OUTWARD:
        lo = r.lo - (4 * n + 16) * _EPS * abs(r.lo) - 1e-300 if math.isfinite(r.lo) else r.lo
        hi = r.hi + (4 * n + 16) * _EPS * abs(r.hi) + 1e-300 if math.isfinite(r.hi) else r.hi
        r = widen(lo, hi, rounding)
    return r


def _derivative_range_fast(fn: AtomicFn, n: int, Y: Interval) -> Interval:
    k = fn.kind
    a, b = Y.lo, Y.hi
    if k is Kind.EXP:
        return Interval(_exp(a), _exp(b))
    if k is Kind.LOG:
        if n == 0:
            return Interval(math.log(a), math.log(b) if math.isfinite(b) else INF)
        c = (-1) ** (n - 1) * math.factorial(n - 1)
        r = _range_power(Y, -n)
        return iv_mul(Interval(c, c), r)
    if k in (Kind.POW, Kind.RECIPROCAL):
        p = _exponent(fn)
        c = _falling(p, n)
        if c == 0:
            return ZERO
        return iv_mul(Interval(c, c), _range_power(Y, p - n))
    if k is Kind.SOFTPLUS:
        if n == 0:
            return Interval(softplus(a) if math.isfinite(a) else 0.0, softplus(b) if math.isfinite(b) else INF)
        sa = sigmoid(a) if math.isfinite(a) else 0.0
        sb = sigmoid(b) if math.isfinite(b) else 1.0
        return _poly_range(_softplus_polys(n)[n], sa, sb)
    if k is Kind.RELU:
        if n == 0:
            return Interval(max(a, 0.0), max(b, 0.0))
        if n == 1:
            return Interval(0.0 if a < 0 else 1.0, 1.0 if b > 0 else 0.0)
        raise DomainError("relu has no higher derivatives at 0")
    raise ValueError(f"{fn!r} is not a unary nonlinear function")


def image(fn: AtomicFn, Y: Interval, rounding: Rounding = Rounding.FAST) -> Interval:
    """Interval extension ``f(Y)`` of a unary atomic function."""
    k = fn.kind
    if k is Kind.ADD_CONST:
        return iv_add(Y, Interval(fn.param, fn.param), rounding)
    if k is Kind.MUL_CONST:
        return iv_mul(Interval(fn.param, fn.param), Y, rounding)
    if k is Kind.NEGATE:
        return Interval(-Y.hi, -Y.lo)
    if k is Kind.POW and _is_int(fn.param) and fn.param >= 0:
        return iv_pow(Y, int(fn.param), rounding)
    if k in (Kind.POW, Kind.RECIPROCAL) and _exponent(fn) < 0 and Y.lo <= 0 <= Y.hi:
        check_domain(fn, Y)
        return _range_power(Y, _exponent(fn))
    return derivative_range(fn, 0, Y, rounding)


# ---------------------------------------------------------------------------
# enclosures

def _series_ratio(fn: AtomicFn, y0: float, delta: float, k: int, coeffs=None):
    """The remainder ratio g(y0 + delta) by summing its power series, or None."""
    kind = fn.kind
    if kind is Kind.EXP:
        if abs(delta) > 2.0:
            return None
        t = math.exp(y0) / math.factorial(k)
        step = lambda t, i: t * delta / (i + 1)
    elif kind in (Kind.POW, Kind.RECIPROCAL, Kind.LOG):
        r = delta / y0
        if abs(r) > 0.5:
            return None
        if kind is Kind.LOG:
            t = (-1) ** (k - 1) / (k * y0 ** k)
            step = lambda t, i: t * (-r) * i / (i + 1)
        else:
            p = _exponent(fn)
            t = _falling(p, k) / math.factorial(k) * _real_pow(y0, p - k)
            step = lambda t, i: t * (p - i) / (i + 1) * r
    elif kind is Kind.SOFTPLUS:
        if abs(delta) > 1.0:
            return None
        cs = coeffs if coeffs is not None else taylor_coeffs(fn, y0, k + 60)
        total, dp = 0.0, 1.0
        for i in range(k, len(cs)):
            term = cs[i] * dp
            total += term
            if i > k + 2 and abs(term) <= 1e-18 * abs(total):
                return total
            dp *= delta
        return None
    else:
        return None
    total = 0.0
    for i in range(k, k + 400):
        total += t
        if t == 0 or (i > k + 1 and abs(t) <= 1e-18 * abs(total)):
            return total
        t = step(t, i)
    return None


def _value(fn: AtomicFn, y: float) -> float:
    k = fn.kind
    if k is Kind.EXP:
        return _exp(y)
    if k is Kind.LOG:
        return math.log(y)
    if k is Kind.SOFTPLUS:
        return softplus(y)
    return _real_pow(y, _exponent(fn))


def _ratio_fast(fn, y0, y, k, coeffs):
    delta = y - y0
    s = _series_ratio(fn, y0, delta, k)
    if s is not None:
        return s
    fy = _value(fn, y)
    if math.isinf(fy):
        return math.copysign(INF, fy * (delta ** k if k % 2 else 1.0))
    acc = fy
    for i in range(k - 1, -1, -1):
        acc -= coeffs[i] * delta ** i
    return acc / delta ** k


def _ratio_outward(fn, y0, y, k, coeff_ivs) -> Interval:
    d = Interval(add_lo(y, -y0, Rounding.OUTWARD), add_hi(y, -y0, Rounding.OUTWARD))
    fy = _value(fn, y)
    acc = widen(fy, fy, Rounding.OUTWARD)
    for i in range(k):
        acc = iv_sub(acc, iv_mul(coeff_ivs[i], iv_pow(d, i, Rounding.OUTWARD), Rounding.OUTWARD), Rounding.OUTWARD)
    dk = iv_pow(d, k, Rounding.OUTWARD)
    return iv_div(acc, dk, Rounding.OUTWARD)


def iv_div(a: Interval, b: Interval, rounding: Rounding = Rounding.FAST) -> Interval:
    """``a / b``; ``b`` containing zero gives the entire line."""
    if b.lo <= 0 <= b.hi:
        return Interval.entire()
    inv = widen(1.0 / b.hi, 1.0 / b.lo, rounding)
    return iv_mul(a, inv, rounding)


def _remainder_monotone(fn: AtomicFn, k: int, Y: Interval) -> bool:
    if fn.kind is Kind.EXP:
        return True
    try:
        d = _derivative_range_fast(fn, k + 1, Y)
    except DomainError:
        return False
    return d.lo >= 0 or d.hi <= 0


def sharp_atomic_enclosure(fn: AtomicFn, k: int, y0: float, Y: Interval,
                           rounding: Rounding = Rounding.FAST) -> list[Interval]:
    """Degree-k polynomial enclosure of ``fn`` at ``y0`` valid for ``y`` in ``Y``.

    Returns ``k + 1`` coefficients: point Taylor coefficients followed by an
    interval for the last one, so that
    ``f(y) in sum_i c_i (y - y0)^i`` for every ``y`` in ``Y``.
    """
    if k < 1:
        raise ValueError("enclosure degree must be at least 1")
    Y = Interval.coerce(Y)
    if not Y.lo <= y0 <= Y.hi:
        raise ValueError(f"expansion point {y0} lies outside {Y}")
    if fn.kind is Kind.RELU:
        return _relu_enclosure(k, y0, Y)
    check_domain(fn, Y)
    check_expansion_point(fn, y0)
    coeffs = taylor_coeffs(fn, y0, k)
    head = [_pad_rel(c, i, rounding) for i, c in enumerate(coeffs[:k])]
    fallback = iv_mul(derivative_range(fn, k, Y, rounding), _inv_factorial(k, rounding), rounding)
    if Y.is_point:
        return head + [fallback]
    if fn.kind in (Kind.POW, Kind.RECIPROCAL) and _exponent(fn) < 0 and Y.lo <= 0 <= Y.hi:
        return head + [Interval.entire()]
    if _is_int_pow_exhausted(fn, k):
        return head + [_pad_rel(coeffs[k], k, rounding)]
    if not _remainder_monotone(fn, k, Y):
        return head + [fallback]
    ck = _pad_rel(coeffs[k], k, rounding)
    ends = []
    for y in (Y.lo, Y.hi):
        if y == y0:
            ends.append(ck)
        elif math.isinf(y):
            ends.append(_ratio_at_infinity(fn, k, y, y0, coeffs))
        elif rounding is Rounding.FAST:
            g = _ratio_fast(fn, y0, y, k, coeffs)
            ends.append(Interval(g, g))
        else:
            ends.append(_ratio_outward(fn, y0, y, k, taylor_coeff_intervals(fn, y0, k, rounding)))
    sharp = iv_hull(ends[0], ends[1])
    try:
        last = iv_intersect(sharp, fallback)
    except EmptyIntersectionError:
        last = fallback
    return head + [last]


def _is_int_pow_exhausted(fn, k):
    """True when ``f`` is a polynomial of degree <= k, so the remainder is exact."""
    if fn.kind is not Kind.POW:
        return False
    p = fn.param
    return _is_int(p) and 0 <= p <= k


def _ratio_at_infinity(fn, k, y, y0, coeffs) -> Interval:
    if fn.kind is Kind.EXP:
        # g grows without bound to the right and decays like -c_{k-1}/(y - y0) to the left
        return Interval(coeffs[k], INF) if y > 0 else ZERO
    return Interval.entire()


def _inv_factorial(k: int, rounding: Rounding) -> Interval:
    f = math.factorial(k)
    v = 1.0 / f
    if rounding is Rounding.FAST:
        return Interval(v, v)
    return widen(v, v, rounding)


def _relu_enclosure(k: int, y0: float, Y: Interval) -> list[Interval]:
    """Enclosure for relu, derived from the closed-form remainder ratio.

    Off the kink relu is linear, so the enclosure is exact. When ``Y``
    straddles 0 the remainder ratio of the linear Taylor polynomial is
    ``t / (t + c)^k`` (up to sign) in the distance ``t`` past the kink, with
    ``c = |y0|``; its maximum on ``t >= 0`` sits at ``t = c / (k - 1)``.
    """
    a, b = Y.lo, Y.hi
    zeros = [ZERO] * (k + 1)
    if a >= 0:
        return [Interval(y0, y0), ONE] + [ZERO] * (k - 1)
    if b <= 0:
        return zeros
    if y0 == 0:
        # relu(y) = s * y with s in [0, 1]
        return [ZERO, Interval(0.0, 1.0)] + [ZERO] * (k - 1)
    c = abs(y0)
    reach = -a if y0 > 0 else b
    if k == 1:
        if y0 > 0:
            return [Interval(y0, y0), Interval(y0 / (y0 - a) if math.isfinite(a) else 0.0, 1.0)]
        return [ZERO, Interval(0.0, b / (b + c) if math.isfinite(b) else 1.0)]
    t = min(reach, c / (k - 1))
    peak = t / (t + c) ** k
    head = ([Interval(y0, y0), ONE] if y0 > 0 else [ZERO, ZERO]) + [ZERO] * (k - 2)
    if y0 > 0 and k % 2 == 1:
        last = Interval(-peak, 0.0)
    else:
        last = Interval(0.0, peak)
    return head + [last]
