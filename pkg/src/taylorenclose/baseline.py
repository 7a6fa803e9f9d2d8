"""Interval Taylor-mode differentiation, used as the comparison baseline.

Propagating truncated Taylor series with interval coefficients, seeded with
``x = X + t`` for the whole trust region ``X``, yields interval enclosures of
``f^{(i)}(X) / i!``. The last one gives the classical Lagrange-remainder
enclosure ``f(x) in sum_{i<k} c_i (x-x0)^i + f^{(k)}(X)/k! (x-x0)^k``.

This module shares no code with the enclosure propagation rules; it only
relies on the interval arithmetic primitives.
"""

from __future__ import annotations

import math

from .atomic import image, iv_div
from .enclosure1d import IntervalPolynomial, TaylorEnclosure1D
from .exprgraph import AtomicFn, ExprGraph, Kind, is_nonneg_int, parse
from .interval import (
    ONE,
    ZERO,
    Interval,
    Rounding,
    iv_add,
    iv_mul,
    iv_neg,
    iv_pow,
    iv_scale,
    iv_sub,
)


def _cauchy(a, b, n, rounding):
    out = []
    for m in range(n + 1):
        acc = ZERO
        for j in range(m + 1):
            acc = iv_add(acc, iv_mul(a[j], b[m - j], rounding), rounding)
        out.append(acc)
    return out


def _is_affine_seed(u):
    return u[1].is_point and all(c == ZERO for c in u[2:])


def _series_pow_int(u, p, n, rounding):
    if p == 0:
        return [ONE] + [ZERO] * n
    if _is_affine_seed(u):
        # (u0 + u1 t)^p with exact powers of u0
        out = []
        for j in range(n + 1):
            if j > p:
                out.append(ZERO)
                continue
            c = float(math.comb(p, j))
            term = iv_mul(iv_pow(u[0], p - j, rounding), iv_pow(u[1], j, rounding), rounding)
            out.append(iv_scale(c, term, rounding))
        return out
    result = None
    base = list(u)
    e = p
    while e:
        if e & 1:
            result = base if result is None else _cauchy(result, base, n, rounding)
        e >>= 1
        if e:
            base = _cauchy(base, base, n, rounding)
    return result


def _series_exp(u, n, rounding):
    w = [image_exp(u[0], rounding)]
    for m in range(1, n + 1):
        acc = ZERO
        for j in range(1, m + 1):
            acc = iv_add(acc, iv_scale(float(j), iv_mul(u[j], w[m - j], rounding), rounding), rounding)
        w.append(iv_scale(1.0 / m, acc, rounding))
    return w


def image_exp(U, rounding):
    return image(AtomicFn.exp(), U, rounding)


def _series_log(u, n, rounding):
    w = [image(AtomicFn.log(), u[0], rounding)]
    for m in range(1, n + 1):
        acc = ZERO
        for j in range(1, m):
            acc = iv_add(acc, iv_scale(float(j), iv_mul(w[j], u[m - j], rounding), rounding), rounding)
        num = iv_sub(u[m], iv_scale(1.0 / m, acc, rounding), rounding)
        w.append(iv_div(num, u[0], rounding))
    return w


def _series_pow_real(u, p, n, rounding):
    w = [image(AtomicFn.pow(p), u[0], rounding)]
    for m in range(1, n + 1):
        acc = ZERO
        for j in range(1, m + 1):
            c = (p + 1) * j - m
            acc = iv_add(acc, iv_scale(float(c), iv_mul(u[j], w[m - j], rounding), rounding), rounding)
        w.append(iv_div(acc, iv_scale(float(m), u[0], rounding), rounding))
    return w


def _series_relu(u, n):
    U = u[0]
    if U.lo >= 0:
        return list(u)
    if U.hi <= 0:
        return [ZERO] * (n + 1)
    head = [Interval(0.0, U.hi)]
    return head + [Interval.entire()] * n


def taylor_series(g: ExprGraph, X: Interval, n: int, rounding: Rounding = Rounding.FAST):
    """Interval Taylor coefficients of the output of ``g``, seeded at ``x = X + t``."""
    rounding = Rounding.parse(rounding)
    X = Interval.coerce(X)
    vals = [[X, ONE] + [ZERO] * (n - 1) if n >= 1 else [X]]
    for eq in g.equations:
        fn, kind = eq.fn, eq.fn.kind
        a = [vals[i] for i in eq.args]
        if kind is Kind.CONST:
            w = [Interval.point(float(fn.param))] + [ZERO] * n
        elif kind is Kind.ADD:
            w = [iv_add(x, y, rounding) for x, y in zip(a[0], a[1])]
        elif kind is Kind.MUL:
            w = _cauchy(a[0], a[1], n, rounding)
        elif kind is Kind.ADD_CONST:
            w = [iv_add(a[0][0], Interval.point(fn.param), rounding)] + a[0][1:]
        elif kind is Kind.MUL_CONST:
            w = [iv_scale(fn.param, c, rounding) for c in a[0]]
        elif kind is Kind.NEGATE:
            w = [iv_neg(c) for c in a[0]]
        elif kind is Kind.POW and is_nonneg_int(fn.param):
            w = _series_pow_int(a[0], fn.param, n, rounding)
        elif kind is Kind.POW:
            w = _series_pow_real(a[0], fn.param, n, rounding)
        elif kind is Kind.RECIPROCAL:
            w = _series_pow_real(a[0], -1, n, rounding)
        elif kind is Kind.EXP:
            w = _series_exp(a[0], n, rounding)
        elif kind is Kind.LOG:
            w = _series_log(a[0], n, rounding)
        elif kind is Kind.SOFTPLUS:
            e = _series_exp(a[0], n, rounding)
            e[0] = iv_add(e[0], ONE, rounding)
            w = _series_log(e, n, rounding)
        elif kind is Kind.RELU:
            w = _series_relu(a[0], n)
        else:
            raise ValueError(f"{fn!r} is not supported by the Taylor-mode baseline")
        vals.append(w)
    return vals[-1]


def lagrange_remainder(g, trust, k: int, rounding: Rounding = Rounding.FAST) -> Interval:
    """Interval enclosure of ``f^{(k)}(trust) / k!``."""
    if isinstance(g, str):
        g = parse(g)
    return taylor_series(g, Interval.coerce(trust), k, rounding)[k]


def baseline_enclosure(g, x0: float, trust, k: int, rounding: Rounding = Rounding.FAST) -> TaylorEnclosure1D:
    """Taylor polynomial at ``x0`` with a Lagrange-form interval last coefficient."""
    if isinstance(g, str):
        g = parse(g)
    trust = Interval.coerce(trust)
    head = taylor_series(g, Interval.point(x0), k, rounding)[:k]
    last = lagrange_remainder(g, trust, k, rounding)
    return TaylorEnclosure1D(float(x0), trust, IntervalPolynomial(tuple(head) + (last,)))
