"""Polynomial enclosures of multivariate, tensor-valued graphs.

A tensor interval polynomial over input shape ``I`` and output shape ``O`` has
coefficients ``P_[j]`` of shape ``O + j*I`` and represents

    z -> sum_j < P_[j], z^(x)j >

where ``<., .>`` contracts trailing axes. Enclosures are propagated exactly as
in the univariate engine; elementwise products use the batched outer product
``(x)_s`` with ``s`` the output rank, and bilinear operations use one of the
interval extensions from :mod:`taylorenclose.tensorcore`.

For one-dimensional inputs the computations reduce, operation for operation,
to those of :mod:`taylorenclose.enclosure1d`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .atomic import image, sharp_atomic_enclosure
from .enclosure1d import compositions, multinomial
from .exprgraph import Kind, is_nonneg_int, parse
from .interval import Interval, Rounding
from .tensorcore import (
    MAX_RANK,
    BilinearOp,
    ResourceLimitError,
    TensorInterval,
    as_tensor,
    as_ti,
    batched_outer,
    bilinear_interval,
    check_rank,
    inner,
    outer_power,
    power_s,
    ti_add,
    ti_apply,
    ti_intersect,
    ti_mul,
    ti_neg,
    ti_pow,
    ti_scale,
)

MAX_ENTRIES = 10 ** 6


def _is_zero(t: TensorInterval) -> bool:
    return not t.lo.any() and not t.hi.any()


@dataclass(frozen=True, eq=False)
class TensorIntervalPolynomial:
    input_shape: tuple
    output_shape: tuple
    coeffs: tuple

    def __post_init__(self):
        I, O = tuple(self.input_shape), tuple(self.output_shape)
        cs = tuple(as_ti(c) for c in self.coeffs)
        for j, c in enumerate(cs):
            want = O + I * j
            if c.shape != want:
                raise ValueError(f"coefficient {j} has shape {c.shape}, expected {want}")
        object.__setattr__(self, "input_shape", I)
        object.__setattr__(self, "output_shape", O)
        object.__setattr__(self, "coeffs", cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, j) -> TensorInterval:
        return self.coeffs[j]

    def __len__(self):
        return len(self.coeffs)

    def zero_coeff(self, j: int) -> TensorInterval:
        return TensorInterval.zeros(self.output_shape + self.input_shape * j)

    def at(self, z, rounding: Rounding = Rounding.FAST) -> TensorInterval:
        """The tensor interval ``sum_j <P_[j], z^(x)j>`` at a real offset ``z``."""
        return tip_range_bound(self, TensorInterval.point(as_tensor(z).reshape(self.input_shape)), rounding)

    def to_json(self) -> dict:
        return {"input_shape": list(self.input_shape), "output_shape": list(self.output_shape),
                "coeffs": [c.to_json() for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj) -> "TensorIntervalPolynomial":
        return cls(tuple(obj["input_shape"]), tuple(obj["output_shape"]),
                   tuple(TensorInterval.from_json(c) for c in obj["coeffs"]))


TIP = TensorIntervalPolynomial


def _zero_poly(I, O, k) -> list:
    return [TensorInterval.zeros(O + I * j) for j in range(k + 1)]


def tip_range_bound(P: TIP, Z, rounding: Rounding = Rounding.FAST) -> TensorInterval:
    """Tensor interval containing ``P(z)`` for every ``z`` in ``Z``."""
    Z = as_ti(Z)
    total = P.coeffs[0]
    for i in range(1, len(P.coeffs)):
        c = P.coeffs[i]
        if _is_zero(c):
            continue
        total = ti_add(total, inner(c, outer_power(Z, i, rounding), rounding), rounding)
    return total


def tip_add(A: TIP, B: TIP, rounding: Rounding = Rounding.FAST) -> TIP:
    if A.output_shape != B.output_shape or A.input_shape != B.input_shape:
        raise ValueError(f"tip_add: shapes {A.output_shape} and {B.output_shape} differ")
    n = max(len(A), len(B))
    ca = list(A.coeffs) + [A.zero_coeff(j) for j in range(len(A), n)]
    cb = list(B.coeffs) + [B.zero_coeff(j) for j in range(len(B), n)]
    return TIP(A.input_shape, A.output_shape, tuple(ti_add(a, b, rounding) for a, b in zip(ca, cb)))


def tip_negate(A: TIP) -> TIP:
    return TIP(A.input_shape, A.output_shape, tuple(ti_neg(c) for c in A.coeffs))


def tip_scale(c, A: TIP, rounding: Rounding = Rounding.FAST) -> TIP:
    c = as_tensor(c)
    out = []
    for j, a in enumerate(A.coeffs):
        cj = c.reshape(c.shape + (1,) * (a.ndim - c.ndim)) if c.ndim else c
        out.append(ti_scale(cj, a, rounding))
    return TIP(A.input_shape, A.output_shape, tuple(out))


def tip_add_const(A: TIP, c, rounding: Rounding = Rounding.FAST) -> TIP:
    c0 = ti_add(A.coeffs[0], TensorInterval.point(np.broadcast_to(as_tensor(c), A.output_shape)), rounding)
    return TIP(A.input_shape, A.output_shape, (c0,) + A.coeffs[1:])


def _check_size(shape, what="coefficient"):
    n = int(np.prod(shape)) if shape else 1
    if n > MAX_ENTRIES:
        raise ResourceLimitError(f"{what} of shape {shape} has {n} entries, above the cap of {MAX_ENTRIES}")


def _fold(I, O, low, high, Z, k, rounding) -> TIP:
    coeffs = list(low)
    if high:
        # high[e] has shape O + k*I + e*I: a polynomial with output shape O + k*I
        Ok = O + I * k
        padded = [h if h is not None else TensorInterval.zeros(Ok + I * e) for e, h in enumerate(high)]
        coeffs.append(tip_range_bound(TIP(I, Ok, tuple(padded)), Z, rounding))
    else:
        coeffs.append(TensorInterval.zeros(O + I * k))
    return TIP(I, O, tuple(coeffs))


def _put(bucket, idx, term, rounding):
    while len(bucket) <= idx:
        bucket.append(None)
    bucket[idx] = term if bucket[idx] is None else ti_add(bucket[idx], term, rounding)


def tip_elementwise_mul(A: TIP, B: TIP, Z, k: int, rounding: Rounding = Rounding.FAST) -> TIP:
    """Elementwise product truncated to degree ``k``."""
    if A.output_shape != B.output_shape:
        raise ValueError(f"elementwise product of shapes {A.output_shape} and {B.output_shape}")
    I, O = A.input_shape, A.output_shape
    s = len(O)
    Z = as_ti(Z)
    low = _zero_poly(I, O, k)[:k]
    high: list = []
    for l, a in enumerate(A.coeffs):
        if _is_zero(a):
            continue
        for m, b in enumerate(B.coeffs):
            if _is_zero(b):
                continue
            _check_size(O + I * (l + m), "intermediate product")
            t = batched_outer(a, b, s, rounding)
            t = as_ti(t)
            if l + m < k:
                low[l + m] = ti_add(low[l + m], t, rounding)
            else:
                _put(high, l + m - k, t, rounding)
    return _fold(I, O, low, high, Z, k, rounding)


def tip_pow(A: TIP, p: int, Z, k: int, rounding: Rounding = Rounding.FAST) -> TIP:
    """Elementwise ``A^p`` truncated to degree ``k``, by multinomial expansion."""
    if not is_nonneg_int(p):
        raise ValueError(f"tip_pow needs an integer exponent >= 0, got {p!r}")
    I, O = A.input_shape, A.output_shape
    s = len(O)
    Z = as_ti(Z)
    if p == 0:
        coeffs = _zero_poly(I, O, k)
        coeffs[0] = TensorInterval.point(np.ones(O))
        return TIP(I, O, tuple(coeffs))
    low = _zero_poly(I, O, k)[:k]
    high: list = []
    nz = [j for j, a in enumerate(A.coeffs) if not _is_zero(a)]
    if not nz:
        return _fold(I, O, low, high, Z, k, rounding)
    for ns in compositions(p, len(nz)):
        term = None
        deg = 0
        for j, n in zip(nz, ns):
            if n == 0:
                continue
            deg += j * n
            _check_size(O + I * deg, "intermediate power")
            f = power_s(A.coeffs[j], n, s, rounding)
            term = f if term is None else as_ti(batched_outer(term, f, s, rounding))
        c = multinomial(p, ns)
        if c != 1.0:
            term = ti_scale(c, term, rounding)
        if deg < k:
            low[deg] = ti_add(low[deg], term, rounding)
        else:
            _put(high, deg - k, term, rounding)
    return _fold(I, O, low, high, Z, k, rounding)


def tip_compose(S, B: TIP, Z, k: int, rounding: Rounding = Rounding.FAST) -> TIP:
    """Elementwise composition ``sum_i S_i * B(z)^i`` truncated to degree ``k``.

    ``S`` is a list of tensor intervals of the output shape: an elementwise
    univariate polynomial in ``y - y0``.
    """
    I, O = B.input_shape, B.output_shape
    coeffs = _zero_poly(I, O, k)
    coeffs[0] = as_ti(S[0])
    out = TIP(I, O, tuple(coeffs))
    for i in range(1, len(S)):
        Si = as_ti(S[i])
        if _is_zero(Si):
            continue
        Bi = tip_pow(B, i, Z, k, rounding)
        scaled = []
        for j, c in enumerate(Bi.coeffs):
            sj = Si.reshape(O + (1,) * (c.ndim - len(O)))
            scaled.append(ti_mul(sj, c, rounding))
        out = tip_add(out, TIP(I, O, tuple(scaled)), rounding)
    return out


def _expansion_point(A: TIP, rounding: Rounding, index):
    c0 = A.coeffs[0]
    if c0.is_point:
        return c0.lo
    if rounding is Rounding.OUTWARD:
        return c0.mid()
    raise ValueError(f"equation {index}: argument of a nonlinear function has a non-point constant term")


def tip_elementwise_fn(fn, A: TIP, Yarg: TensorInterval, Z, k: int, rounding: Rounding = Rounding.FAST,
                       index=None) -> TIP:
    """Enclosure of ``fn`` applied elementwise to ``A(z)``."""
    y0 = _expansion_point(A, rounding, index)
    O = A.output_shape
    y0f = np.asarray(y0).reshape(-1)
    ylo, yhi = Yarg.lo.reshape(-1), Yarg.hi.reshape(-1)
    per = []
    for e in range(y0f.size):
        yv = float(y0f[e])
        Ye = Interval(min(float(ylo[e]), yv), max(float(yhi[e]), yv))
        per.append(sharp_atomic_enclosure(fn, k, yv, Ye, rounding))
    S = [TensorInterval.from_intervals([p[i] for p in per], O) for i in range(k + 1)]
    shift = ti_add(A.coeffs[0], TensorInterval.point(-np.asarray(y0).reshape(O)), rounding)
    B = TIP(A.input_shape, O, (shift,) + A.coeffs[1:])
    return tip_compose(S, B, Z, k, rounding)


def tip_bilinear(op: BilinearOp, A: TIP, B: TIP, Z, k: int, strategy: str | None = None,
                 rounding: Rounding = Rounding.FAST) -> TIP:
    """Enclosure of ``op(A(z), B(z))`` truncated to degree ``k``."""
    I = A.input_shape
    O = tuple(op.output_shape(A.output_shape, B.output_shape))
    r = len(I)
    Z = as_ti(Z)
    low = _zero_poly(I, O, k)[:k]
    high: list = []
    for l, a in enumerate(A.coeffs):
        if _is_zero(a):
            continue
        for m, b in enumerate(B.coeffs):
            if _is_zero(b):
                continue
            _check_size(O + I * (l + m), "intermediate bilinear term")
            if a.is_point and b.is_point:
                t = TensorInterval.point(op(a.lo, b.lo, l * r, m * r))
                if rounding is Rounding.OUTWARD:
                    t = bilinear_interval(op, a, b, l * r, m * r, "signsplit", rounding)
            else:
                t = bilinear_interval(op, a, b, l * r, m * r, strategy, rounding)
            if l + m < k:
                low[l + m] = ti_add(low[l + m], t, rounding)
            else:
                _put(high, l + m - k, t, rounding)
    return _fold(I, O, low, high, Z, k, rounding)


# ---------------------------------------------------------------------------
# enclosures

@dataclass(frozen=True, eq=False)
class TaylorEnclosureND:
    x0: np.ndarray
    trust: TensorInterval
    poly: TensorIntervalPolynomial

    @property
    def degree(self) -> int:
        return self.poly.degree

    @property
    def coeffs(self):
        return self.poly.coeffs

    def bound_at(self, x, rounding: Rounding = Rounding.FAST) -> TensorInterval:
        rounding = Rounding.parse(rounding)
        z = as_tensor(x).reshape(self.x0.shape) - self.x0
        if rounding is Rounding.FAST:
            return self.poly.at(z, rounding)
        # x - x0 itself may round
        Zi = TensorInterval(np.nextafter(z, -np.inf), np.nextafter(z, np.inf))
        return tip_range_bound(self.poly, Zi, rounding)

    def range(self, rounding: Rounding = Rounding.FAST) -> TensorInterval:
        Z = TensorInterval(self.trust.lo - self.x0, self.trust.hi - self.x0)
        return tip_range_bound(self.poly, Z, rounding)

    def to_json(self) -> dict:
        return {"x0": as_tensor(self.x0).tolist(), "trust": self.trust.to_json(), "poly": self.poly.to_json()}

    @classmethod
    def from_json(cls, obj) -> "TaylorEnclosureND":
        return cls(as_tensor(obj["x0"]), TensorInterval.from_json(obj["trust"]),
                   TensorIntervalPolynomial.from_json(obj["poly"]))


def _as_trust(trust, shape) -> TensorInterval:
    if isinstance(trust, TensorInterval):
        t = trust
    elif isinstance(trust, Interval):
        t = TensorInterval(np.full(shape, trust.lo), np.full(shape, trust.hi))
    else:
        items = list(trust)
        if len(items) == 2 and all(np.ndim(v) == 0 for v in items):
            t = TensorInterval(np.full(shape, float(items[0])), np.full(shape, float(items[1])))
        elif items and isinstance(items[0], Interval):
            t = TensorInterval.from_intervals(items, shape)
        else:
            t = TensorInterval.from_intervals([Interval.coerce(v) for v in items], shape)
    if t.shape != tuple(shape):
        t = t.reshape(shape)
    return t


@dataclass
class TraceND:
    polys: list = field(default_factory=list)
    ranges: list = field(default_factory=list)


def autobound_nd(g, x0, trust, k: int, batched_strategy: str | None = None,
                 rounding: Rounding | str = Rounding.FAST, max_rank: int = MAX_RANK,
                 trace: TraceND | None = None) -> TaylorEnclosureND:
    """Degree-``k`` enclosure of a multivariate graph over a box trust region.

    Args:
        g: An :class:`ExprGraph` (scalar inputs or one tensor input) or an
            expression string.
        x0: Expansion point, shape ``(d,)`` for scalar-input graphs or the
            graph's ``input_shape`` otherwise.
        trust: The box, as a :class:`TensorInterval`, a list of ``(lo, hi)``
            pairs, or a single pair applied to every coordinate.
        k: Degree, at least 1.
        batched_strategy: ``"naive"``, ``"midpoint_radius"``, ``"signsplit"``,
            or None to pick midpoint-radius for nonnegative bilinear ops and
            sign-split otherwise.
    """
    if isinstance(g, str):
        g = parse(g)
    rounding = Rounding.parse(rounding)
    if not is_nonneg_int(k) or k < 1:
        raise ValueError(f"degree must be an integer >= 1, got {k!r}")
    if g.input_shape is None:
        I = (g.num_inputs,)
    else:
        I = g.input_shape
    x0 = as_tensor(x0).reshape(I)
    trust = _as_trust(trust, I)
    if not trust.contains(x0):
        raise ValueError("x0 lies outside the trust region")
    if not (np.isfinite(trust.lo).all() and np.isfinite(trust.hi).all()):
        raise ValueError("the trust region must be bounded")
    Zlo, Zhi = trust.lo - x0, trust.hi - x0
    if rounding is Rounding.OUTWARD:
        Zlo, Zhi = np.nextafter(Zlo, -np.inf), np.nextafter(Zhi, np.inf)
        Zlo = np.where(trust.lo == x0, 0.0, Zlo)
        Zhi = np.where(trust.hi == x0, 0.0, Zhi)
    Z = TensorInterval(Zlo, Zhi)
    d = int(np.prod(I)) if I else 1
    # refuse oversize input coefficients before allocating them
    O_in = () if g.input_shape is None else I
    for i in range(k + 1):
        check_rank(O_in + I * i, max_rank, "input coefficient")
        _check_size(O_in + I * i, "input coefficient")

    P: list = []
    Y: list = []
    if g.input_shape is None:
        eye = np.eye(d)
        for j in range(g.num_inputs):
            coeffs = [TensorInterval.point(x0[j]), TensorInterval.point(eye[j])]
            coeffs += [TensorInterval.zeros(I * i) for i in range(2, k + 1)]
            P.append(TIP(I, (), tuple(coeffs[: k + 1])))
            Y.append(TensorInterval(trust.lo[j], trust.hi[j]))
    else:
        eye = np.eye(d).reshape(I + I)
        coeffs = [TensorInterval.point(x0), TensorInterval.point(eye)]
        coeffs += [TensorInterval.zeros(I * (i + 1)) for i in range(2, k + 1)]
        P.append(TIP(I, I, tuple(coeffs[: k + 1])))
        Y.append(trust)

    for idx, eq in enumerate(g.equations):
        fn, kind = eq.fn, eq.fn.kind
        args = [P[a] for a in eq.args]
        yargs = [Y[a] for a in eq.args]
        if kind is Kind.CONST:
            c = as_tensor(fn.param)
            O = c.shape
            coeffs = _zero_poly(I, O, k)
            coeffs[0] = TensorInterval.point(c)
            Pi = TIP(I, O, tuple(coeffs))
            Yi0 = TensorInterval.point(c)
        elif kind is Kind.ADD:
            A, B = _broadcast_pair(args[0], args[1])
            Pi = tip_add(A, B, rounding)
            Yi0 = ti_add(yargs[0], yargs[1], rounding)
        elif kind is Kind.MUL:
            A, B = _broadcast_pair(args[0], args[1])
            Pi = tip_elementwise_mul(A, B, Z, k, rounding)
            Yi0 = ti_mul(yargs[0], yargs[1], rounding)
        elif kind is Kind.ADD_CONST:
            Pi = tip_add_const(args[0], fn.param, rounding)
            Yi0 = ti_add(yargs[0], TensorInterval.point(np.full(yargs[0].shape, fn.param)), rounding)
        elif kind is Kind.MUL_CONST:
            Pi = tip_scale(fn.param, args[0], rounding)
            Yi0 = ti_scale(fn.param, yargs[0], rounding)
        elif kind is Kind.NEGATE:
            Pi = tip_negate(args[0])
            Yi0 = ti_neg(yargs[0])
        elif kind is Kind.POW and is_nonneg_int(fn.param):
            Pi = tip_pow(args[0], fn.param, Z, k, rounding)
            Yi0 = ti_pow(yargs[0], fn.param, rounding)
        elif kind is Kind.BILINEAR:
            Pi = tip_bilinear(fn.param, args[0], args[1], Z, k, batched_strategy, rounding)
            Yi0 = bilinear_interval(fn.param, yargs[0], yargs[1], 0, 0, batched_strategy, rounding)
        else:
            Pi = tip_elementwise_fn(fn, args[0], yargs[0], Z, k, rounding, idx)
            Yi0 = ti_apply(lambda iv: image(fn, iv, rounding), yargs[0])
        check_rank(Pi.output_shape + I * k, max_rank, "coefficient")
        _check_size(Pi.output_shape + I * k)
        Yi = ti_intersect(Yi0, tip_range_bound(Pi, Z, rounding))
        P.append(Pi)
        Y.append(Yi)
    if trace is not None:
        trace.polys, trace.ranges = P, Y
    return TaylorEnclosureND(x0, trust, P[-1])


def _broadcast_pair(A: TIP, B: TIP):
    """Broadcast a scalar-output polynomial against a tensor-output one."""
    if A.output_shape == B.output_shape:
        return A, B
    if A.output_shape == ():
        return _broadcast_to(A, B.output_shape), B
    if B.output_shape == ():
        return A, _broadcast_to(B, A.output_shape)
    raise ValueError(f"cannot combine output shapes {A.output_shape} and {B.output_shape}")


def _broadcast_to(A: TIP, O) -> TIP:
    out = []
    for j, c in enumerate(A.coeffs):
        shape = tuple(O) + A.input_shape * j
        out.append(TensorInterval(np.broadcast_to(c.lo, shape).copy(), np.broadcast_to(c.hi, shape).copy()))
    return TIP(A.input_shape, tuple(O), tuple(out))
