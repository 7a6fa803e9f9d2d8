"""Real tensors, tensor intervals, and interval extensions of bilinear maps.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. A
:class:`TensorInterval` is a pair of equally shaped arrays ``lo <= hi``.

Contractions follow one convention throughout: ``inner(A, B)`` sums over the
trailing axes of ``A`` that match the full shape of ``B``. ``outer`` appends
axes, and ``batched_outer(A, B, s)`` shares the first ``s`` axes.

Under ``Rounding.OUTWARD`` the vectorised routines pad results with an a-priori
bound on the floating-point error of a length-n summation,
``gamma(n) * sum |terms|`` with ``gamma(n) = n u / (1 - n u)``, and then nudge
the padded endpoints one more ulp. This is rigorous for round-to-nearest
arithmetic barring underflow, for which a tiny absolute term is added.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass

import numpy as np

from .interval import Interval, Rounding

Tensor = np.ndarray

MAX_RANK = 6
_U = 2.0 ** -53
_ETA = 2.0 ** -1074


class ResourceLimitError(RuntimeError):
    """A tensor would exceed the configured rank or size cap."""


def as_tensor(x) -> Tensor:
    return np.asarray(x, dtype=np.float64)


def check_rank(shape, max_rank: int = MAX_RANK, what: str = "tensor"):
    if len(shape) > max_rank:
        raise ResourceLimitError(f"{what} of rank {len(shape)} exceeds the rank cap {max_rank}")


# ---------------------------------------------------------------------------
# JSON

def _nested_to_json(a: np.ndarray):
    if a.ndim == 0:
        v = float(a)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return [_nested_to_json(x) for x in a]


def _nested_from_json(obj):
    if isinstance(obj, list):
        return [_nested_from_json(x) for x in obj]
    if isinstance(obj, str):
        return {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf}[obj.strip().lower()]
    return float(obj)


def tensor_to_json(a) -> dict:
    a = as_tensor(a)
    return {"shape": list(a.shape), "data": _nested_to_json(a)}


def tensor_from_json(obj) -> Tensor:
    a = as_tensor(_nested_from_json(obj["data"]))
    shape = tuple(obj.get("shape", a.shape))
    if a.shape != shape:
        a = a.reshape(shape)
    return a


# ---------------------------------------------------------------------------
# rounding helpers

def _mulz(x, y):
    """Elementwise product with the convention 0 * inf = 0."""
    with np.errstate(invalid="ignore", over="ignore"):
        p = np.multiply(x, y)
    return np.where(np.isnan(p), 0.0, p)


def _gamma(n: int) -> float:
    nu = (n + 1) * _U
    return nu / (1.0 - nu)


def _outward(lo, hi, mag=None, nterms: int = 1, rounding: Rounding = Rounding.FAST):
    """Widen computed endpoints according to ``rounding``."""
    if rounding is Rounding.FAST:
        return lo, hi
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if mag is not None:
        pad = _gamma(nterms) * np.asarray(mag, dtype=np.float64) + nterms * _ETA
        with np.errstate(invalid="ignore"):
            lo = np.where(np.isfinite(lo), lo - pad, lo)
            hi = np.where(np.isfinite(hi), hi + pad, hi)
    return np.nextafter(lo, -np.inf), np.nextafter(hi, np.inf)


# ---------------------------------------------------------------------------
# tensor intervals

@dataclass(frozen=True, eq=False)
class TensorInterval:
    """Elementwise interval ``[lo, hi]`` over a tensor shape."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = as_tensor(self.lo)
        hi = as_tensor(self.hi)
        if lo.shape != hi.shape:
            lo, hi = np.broadcast_arrays(lo, hi)
            lo, hi = lo.copy(), hi.copy()
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise ValueError("tensor interval endpoints must not be NaN")
        if (lo > hi).any():
            raise ValueError("tensor interval has an element with lo > hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x) -> "TensorInterval":
        x = as_tensor(x)
        return cls(x, x.copy())

    @classmethod
    def zeros(cls, shape) -> "TensorInterval":
        z = np.zeros(shape)
        return cls(z, z.copy())

    @classmethod
    def from_interval(cls, iv: Interval) -> "TensorInterval":
        return cls(np.array(iv.lo), np.array(iv.hi))

    @classmethod
    def from_intervals(cls, items, shape=None) -> "TensorInterval":
        items = list(items)
        lo = np.array([it.lo for it in items], dtype=np.float64)
        hi = np.array([it.hi for it in items], dtype=np.float64)
        if shape is not None:
            lo, hi = lo.reshape(shape), hi.reshape(shape)
        return cls(lo, hi)

    @property
    def shape(self):
        return self.lo.shape

    @property
    def ndim(self):
        return self.lo.ndim

    @property
    def size(self):
        return self.lo.size

    @property
    def is_point(self) -> bool:
        return bool(np.array_equal(self.lo, self.hi))

    def __getitem__(self, idx):
        lo, hi = self.lo[idx], self.hi[idx]
        if np.ndim(lo) == 0:
            return Interval(float(lo), float(hi))
        return TensorInterval(lo, hi)

    def reshape(self, shape) -> "TensorInterval":
        return TensorInterval(self.lo.reshape(shape), self.hi.reshape(shape))

    def intervals(self):
        """Flat list of scalar intervals in C order."""
        return [Interval(float(a), float(b)) for a, b in zip(self.lo.ravel(), self.hi.ravel())]

    def mid(self) -> np.ndarray:
        lo, hi = self.lo, self.hi
        with np.errstate(invalid="ignore"):
            m = 0.5 * lo + 0.5 * hi
        m = np.where(np.isneginf(lo) & np.isposinf(hi), 0.0, m)
        m = np.where(np.isneginf(lo) & np.isfinite(hi), hi, m)
        m = np.where(np.isposinf(hi) & np.isfinite(lo), lo, m)
        return np.clip(m, lo, hi)

    def rad(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, x, atol: float = 0.0) -> bool:
        if isinstance(x, TensorInterval):
            return bool(((self.lo - atol) <= x.lo).all() and (x.hi <= (self.hi + atol)).all())
        x = as_tensor(x)
        return bool(((self.lo - atol) <= x).all() and (x <= (self.hi + atol)).all())

    def to_json(self) -> dict:
        return {"shape": list(self.shape), "lo": _nested_to_json(self.lo), "hi": _nested_to_json(self.hi)}

    @classmethod
    def from_json(cls, obj) -> "TensorInterval":
        shape = tuple(obj["shape"])
        lo = as_tensor(_nested_from_json(obj["lo"])).reshape(shape)
        hi = as_tensor(_nested_from_json(obj["hi"])).reshape(shape)
        return cls(lo, hi)

    def __repr__(self):
        return f"TensorInterval(shape={self.shape}, lo={self.lo.tolist()}, hi={self.hi.tolist()})"


def as_ti(x) -> TensorInterval:
    if isinstance(x, TensorInterval):
        return x
    if isinstance(x, Interval):
        return TensorInterval.from_interval(x)
    return TensorInterval.point(x)


# ---------------------------------------------------------------------------
# elementwise interval arithmetic

def _prod_hull(alo, ahi, blo, bhi):
    p1, p2, p3, p4 = _mulz(alo, blo), _mulz(alo, bhi), _mulz(ahi, blo), _mulz(ahi, bhi)
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return lo, hi


def ti_add(a, b, rounding: Rounding = Rounding.FAST) -> TensorInterval:
    a, b = as_ti(a), as_ti(b)
    lo, hi = a.lo + b.lo, a.hi + b.hi
    if rounding is Rounding.OUTWARD:
        lo, hi = _outward(lo, hi, rounding=rounding)
    return TensorInterval(lo, hi)


def ti_neg(a) -> TensorInterval:
    a = as_ti(a)
    return TensorInterval(-a.hi, -a.lo)


def ti_sub(a, b, rounding: Rounding = Rounding.FAST) -> TensorInterval:
    return ti_add(a, ti_neg(b), rounding)


def ti_mul(a, b, rounding: Rounding = Rounding.FAST) -> TensorInterval:
    """Elementwise product (with numpy broadcasting)."""
    a, b = as_ti(a), as_ti(b)
    lo, hi = _prod_hull(a.lo, a.hi, b.lo, b.hi)
    if rounding is Rounding.OUTWARD:
        lo, hi = _outward(lo, hi, rounding=rounding)
    return TensorInterval(lo, hi)


def ti_scale(c, a, rounding: Rounding = Rounding.FAST) -> TensorInterval:
    return ti_mul(TensorInterval.point(c), a, rounding)


def _pow_arr(x, p):
    with np.errstate(over="ignore"):
        return np.power(x, p)


def ti_pow(a, p: int, rounding: Rounding = Rounding.FAST) -> TensorInterval:
    """Exact elementwise range of ``x**p`` for an integer ``p >= 0``."""
    a = as_ti(a)
    if int(p) != p or p < 0:
        raise ValueError(f"ti_pow needs an integer exponent >= 0, got {p!r}")
    p = int(p)
    if p == 0:
        return TensorInterval(np.ones(a.shape), np.ones(a.shape))
    if p == 1:
        return a
    plo, phi = _pow_arr(a.lo, p), _pow_arr(a.hi, p)
    if p % 2:
        lo, hi = plo, phi
    else:
        straddle = (a.lo < 0) & (a.hi > 0)
        lo = np.where(straddle, 0.0, np.minimum(plo, phi))
        hi = np.maximum(plo, phi)
    if rounding is Rounding.OUTWARD:
        lo = np.where((lo == 0) | np.isinf(lo), lo, np.nextafter(lo, -np.inf))
        hi = np.where((hi == 0) | np.isinf(hi), hi, np.nextafter(hi, np.inf))
    return TensorInterval(lo, hi)


def ti_intersect(a, b) -> TensorInterval:
    from .interval import EmptyIntersectionError

    a, b = as_ti(a), as_ti(b)
    lo, hi = np.maximum(a.lo, b.lo), np.minimum(a.hi, b.hi)
    if (lo > hi).any():
        raise EmptyIntersectionError("disjoint tensor enclosures")
    return TensorInterval(lo, hi)


def ti_map_monotone(f, a, increasing: bool = True) -> TensorInterval:
    """Apply a monotone elementwise function by mapping the endpoints."""
    a = as_ti(a)
    lo, hi = f(a.lo), f(a.hi)
    return TensorInterval(lo, hi) if increasing else TensorInterval(hi, lo)


def ti_apply(fn, a, out_shape=None) -> TensorInterval:
    """Apply a scalar interval function ``fn(Interval) -> Interval`` elementwise."""
    a = as_ti(a)
    res = [fn(iv) for iv in a.intervals()]
    return TensorInterval.from_intervals(res, a.shape if out_shape is None else out_shape)


def ti_sum(items, shape, rounding: Rounding = Rounding.FAST) -> TensorInterval:
    total = TensorInterval.zeros(shape)
    for it in items:
        total = ti_add(total, it, rounding)
    return total


# ---------------------------------------------------------------------------
# inner and outer products

def _is_interval(x) -> bool:
    return isinstance(x, TensorInterval)


def inner(A, B, rounding: Rounding = Rounding.FAST):
    """Contract the trailing axes of ``A`` against all axes of ``B``.

    Point inputs give a point tensor; any interval input gives a
    :class:`TensorInterval`.
    """
    if not _is_interval(A) and not _is_interval(B):
        A, B = as_tensor(A), as_tensor(B)
        if B.ndim == 0:
            return A * B
        return np.tensordot(A, B, axes=B.ndim)
    A, B = as_ti(A), as_ti(B)
    nb = B.ndim
    if A.shape[A.ndim - nb:] != B.shape:
        raise ValueError(f"inner: trailing shape of {A.shape} does not match {B.shape}")
    lo, hi = _prod_hull(A.lo, A.hi, B.lo, B.hi)
    axes = tuple(range(A.ndim - nb, A.ndim))
    slo, shi = lo.sum(axis=axes), hi.sum(axis=axes)
    if rounding is Rounding.OUTWARD:
        mag = np.maximum(np.abs(lo), np.abs(hi)).sum(axis=axes)
        n = int(np.prod(B.shape)) if nb else 1
        slo, shi = _outward(slo, shi, mag, n, rounding)
    return TensorInterval(slo, shi)


def outer(A, B, rounding: Rounding = Rounding.FAST):
    return batched_outer(A, B, 0, rounding)


def batched_outer(A, B, s: int, rounding: Rounding = Rounding.FAST):
    """Outer product sharing the first ``s`` axes: ``S+a`` and ``S+b`` give ``S+a+b``."""
    interval = _is_interval(A) or _is_interval(B)
    A, B = as_ti(A), as_ti(B)
    if A.shape[:s] != B.shape[:s]:
        raise ValueError(f"batched_outer: leading shapes {A.shape[:s]} and {B.shape[:s]} differ")
    na, nb = A.ndim - s, B.ndim - s
    ashape = A.shape + (1,) * nb
    bshape = B.shape[:s] + (1,) * na + B.shape[s:]
    alo, ahi = A.lo.reshape(ashape), A.hi.reshape(ashape)
    blo, bhi = B.lo.reshape(bshape), B.hi.reshape(bshape)
    if not interval:
        return _mulz(alo, blo)
    lo, hi = _prod_hull(alo, ahi, blo, bhi)
    if rounding is Rounding.OUTWARD:
        lo, hi = _outward(lo, hi, rounding=rounding)
    return TensorInterval(lo, hi)


def power_s(U, n: int, s: int, rounding: Rounding = Rounding.FAST) -> TensorInterval:
    """Elementwise-exact ``U (x)_s U (x)_s ... (n times)``.

    Entry ``(o, j1..jn)`` is the exact range of ``prod_l u[o, j_l]`` when the
    entries of ``U`` vary independently, i.e. repeated indices are raised to
    a power with :func:`ti_pow` rather than multiplied as unrelated factors.
    """
    U = as_ti(U)
    lead = U.shape[:s]
    tail = U.shape[s:]
    if n == 0:
        return TensorInterval(np.ones(lead), np.ones(lead))
    m = int(np.prod(tail)) if tail else 1
    out_shape = lead + tail * n
    if len(out_shape) and int(np.prod(out_shape)) > 10 ** 7:
        raise ResourceLimitError(f"tensor power of shape {out_shape} is too large")
    flat = U.reshape(lead + (m,))
    lo = np.empty(lead + (m,) * n)
    hi = np.empty(lead + (m,) * n)
    cache = {}
    for idx in itertools.product(range(m), repeat=n):
        key = tuple(sorted(idx))
        if key not in cache:
            val = None
            for j, grp in itertools.groupby(key):
                c = len(list(grp))
                term = ti_pow(flat[(Ellipsis, j)], c, rounding)
                val = term if val is None else ti_mul(val, term, rounding)
            cache[key] = val
        val = cache[key]
        lo[(Ellipsis,) + idx] = val.lo
        hi[(Ellipsis,) + idx] = val.hi
    return TensorInterval(lo.reshape(out_shape), hi.reshape(out_shape))


def outer_power(Z, n: int, rounding: Rounding = Rounding.FAST) -> TensorInterval:
    """``Z^{(x) n}`` with each monomial entry bounded exactly."""
    return power_s(Z, n, 0, rounding)


# ---------------------------------------------------------------------------
# bilinear operators

_LETTERS = string.ascii_letters


@dataclass(frozen=True, eq=False)
class BilinearOp:
    """A bilinear map ``b(X, Y) = <<W, X>, Y>``.

    ``kind`` is ``"dot"`` (vectors to a scalar), ``"matmul"`` (matrix times
    vector or matrix), or ``"general"`` with an explicit coefficient tensor
    ``W`` of shape ``O + Y.shape + X.shape``. Dot and matmul are evaluated
    directly without materialising ``W``.
    """

    kind: str
    W: np.ndarray | None = None
    x_ndim: int = 1
    y_ndim: int = 1

    def __post_init__(self):
        if self.kind not in ("dot", "matmul", "general"):
            raise ValueError(f"unknown bilinear kind {self.kind!r}")
        if self.kind == "general":
            if self.W is None:
                raise ValueError("general bilinear op needs W")
            object.__setattr__(self, "W", as_tensor(self.W))
            if np.isnan(self.W).any() or not np.isfinite(self.W).all():
                raise ValueError("W must be finite")

    @classmethod
    def dot(cls) -> "BilinearOp":
        return cls("dot")

    @classmethod
    def matmul(cls) -> "BilinearOp":
        return cls("matmul")

    @classmethod
    def general(cls, W, x_ndim: int = 1, y_ndim: int = 1) -> "BilinearOp":
        return cls("general", as_tensor(W), x_ndim, y_ndim)

    @property
    def nonnegative(self) -> bool:
        return self.kind != "general" or bool((self.W >= 0).all())

    def split(self):
        """``(W+, W-)`` parts with ``W = W+ - W-`` and both nonnegative."""
        if self.kind != "general":
            return self, None
        pos = np.maximum(self.W, 0.0)
        neg = np.maximum(-self.W, 0.0)
        mk = lambda w: BilinearOp("general", w, self.x_ndim, self.y_ndim)
        return mk(pos), (mk(neg) if (neg > 0).any() else None)

    def abs(self) -> "BilinearOp":
        if self.kind != "general":
            return self
        return BilinearOp("general", np.abs(self.W), self.x_ndim, self.y_ndim)

    def base_ndims(self, x_ndim_total: int, y_ndim_total: int, ex: int, ey: int):
        bx, by = x_ndim_total - ex, y_ndim_total - ey
        if self.kind == "dot":
            want = (1, 1)
        elif self.kind == "matmul":
            if bx != 2 or by not in (1, 2):
                raise ValueError(f"matmul needs a matrix and a vector/matrix, got ranks {bx}, {by}")
            want = (2, by)
        else:
            want = (self.x_ndim, self.y_ndim)
        if (bx, by) != want:
            raise ValueError(f"{self.kind}: operand ranks {bx}, {by} do not match {want}")
        return bx, by

    def output_shape(self, xs, ys):
        xs, ys = tuple(xs), tuple(ys)
        if self.kind == "dot":
            if xs != ys:
                raise ValueError(f"dot: shapes {xs} and {ys} differ")
            return ()
        if self.kind == "matmul":
            if len(xs) != 2 or len(ys) not in (1, 2) or xs[1] != ys[0]:
                raise ValueError(f"matmul: incompatible shapes {xs} and {ys}")
            return (xs[0],) + ys[1:]
        o = self.W.shape[: self.W.ndim - self.x_ndim - self.y_ndim]
        if self.W.shape[len(o):] != ys + xs:
            raise ValueError(f"general bilinear: W shape {self.W.shape} does not fit {ys} and {xs}")
        return o

    def subscripts(self, bx: int, by: int, ex: int, ey: int):
        """Einsum subscripts ``(w, x, y, out)``; ``w`` is None for dot/matmul."""
        letters = iter(_LETTERS)
        take = lambda n: "".join(next(letters) for _ in range(n))
        if self.kind == "dot":
            a = take(1)
            w, xs, ys, out = None, a, a, ""
        elif self.kind == "matmul":
            a, b = take(1), take(1)
            if by == 1:
                w, xs, ys, out = None, a + b, b, a
            else:
                c = take(1)
                w, xs, ys, out = None, a + b, b + c, a + c
        else:
            no = self.W.ndim - bx - by
            o, yl, xl = take(no), take(by), take(bx)
            w, xs, ys, out = o + yl + xl, xl, yl, o
        px, py = take(ex), take(ey)
        return w, xs + px, ys + py, out + px + py

    def __call__(self, X, Y, ex: int = 0, ey: int = 0) -> np.ndarray:
        X, Y = as_tensor(X), as_tensor(Y)
        bx, by = self.base_ndims(X.ndim, Y.ndim, ex, ey)
        w, xs, ys, out = self.subscripts(bx, by, ex, ey)
        if w is None:
            return _einsum(f"{xs},{ys}->{out}", X, Y)
        return _einsum(f"{w},{xs},{ys}->{out}", self.W, X, Y)

    def contracted_size(self, X_shape, ex: int = 0) -> int:
        """Number of products summed into each output entry."""
        bx = len(X_shape) - ex
        base = tuple(X_shape[:bx])
        if self.kind == "dot":
            return int(base[0]) if base else 1
        if self.kind == "matmul":
            return int(base[1])
        return int(np.prod(self.W.shape[self.W.ndim - self.x_ndim - self.y_ndim:]))

    def to_json(self) -> dict:
        if self.kind == "general":
            return {"kind": "general", "W": tensor_to_json(self.W), "x_ndim": self.x_ndim, "y_ndim": self.y_ndim}
        return {"kind": self.kind}

    @classmethod
    def from_json(cls, obj) -> "BilinearOp":
        if isinstance(obj, str):
            return cls(obj)
        if obj["kind"] == "general":
            return cls("general", tensor_from_json(obj["W"]), obj.get("x_ndim", 1), obj.get("y_ndim", 1))
        return cls(obj["kind"])

    def __eq__(self, other):
        if not isinstance(other, BilinearOp) or self.kind != other.kind:
            return NotImplemented if not isinstance(other, BilinearOp) else False
        if self.kind != "general":
            return True
        return (self.x_ndim, self.y_ndim) == (other.x_ndim, other.y_ndim) and np.array_equal(self.W, other.W)

    def __hash__(self):
        if self.kind != "general":
            return hash(self.kind)
        return hash((self.kind, self.W.shape, self.W.tobytes(), self.x_ndim, self.y_ndim))

    def __repr__(self):
        if self.kind == "general":
            return f"BilinearOp.general(W.shape={self.W.shape})"
        return f"BilinearOp.{self.kind}()"


def _einsum(spec, *ops):
    with np.errstate(invalid="ignore", over="ignore"):
        r = np.einsum(spec, *ops, optimize=len(ops) > 2)
    return np.where(np.isnan(r), 0.0, r) if np.ndim(r) else (0.0 if np.isnan(r) else r)


def _pos(a):
    return np.maximum(a, 0.0)


def _neg(a):
    return np.minimum(a, 0.0)


def _extra_ranks(op: BilinearOp, X: TensorInterval, Y: TensorInterval, ex, ey):
    if ex is None:
        ex = 0
    if ey is None:
        ey = 0
    op.base_ndims(X.ndim, Y.ndim, ex, ey)
    return ex, ey


def _finish(op, X, Y, ex, ey, lo, hi, ncalls, rounding):
    if rounding is Rounding.FAST:
        return TensorInterval(lo, hi)
    mx = np.maximum(np.abs(X.lo), np.abs(X.hi))
    my = np.maximum(np.abs(Y.lo), np.abs(Y.hi))
    mag = as_tensor(op.abs()(mx, my, ex, ey))
    n = op.contracted_size(X.shape, ex) * ncalls + 2 * ncalls
    lo, hi = _outward(lo, hi, mag * ncalls, n, rounding)
    return TensorInterval(lo, hi)


def bilinear_naive(op: BilinearOp, X, Y, ex: int = 0, ey: int = 0, rounding: Rounding = Rounding.FAST):
    """``<<W, X>, Y>`` evaluated with scalar interval arithmetic."""
    X, Y = as_ti(X), as_ti(Y)
    ex, ey = _extra_ranks(op, X, Y, ex, ey)
    bx, by = op.base_ndims(X.ndim, Y.ndim, ex, ey)
    w, xs, ys, out = op.subscripts(bx, by, ex, ey)
    full = "".join(dict.fromkeys((w or "") + xs + ys))
    # output letters of W come first in ``full`` and do not occur in X or Y
    lead = len(full) - len("".join(dict.fromkeys(xs + ys)))
    rest = full[lead:]
    prods = [_einsum(f"{xs},{ys}->{rest}", a, b) for a in (X.lo, X.hi) for b in (Y.lo, Y.hi)]
    prods = [p.reshape((1,) * lead + p.shape) for p in prods]
    plo = np.minimum(np.minimum(prods[0], prods[1]), np.minimum(prods[2], prods[3]))
    phi = np.maximum(np.maximum(prods[0], prods[1]), np.maximum(prods[2], prods[3]))
    if w is not None:
        Wf = op.W.reshape(op.W.shape + (1,) * (len(full) - len(w)))
        a, b = _mulz(Wf, plo), _mulz(Wf, phi)
        plo, phi = np.minimum(a, b), np.maximum(a, b)
    lo = _einsum(f"{full}->{out}", plo)
    hi = _einsum(f"{full}->{out}", phi)
    return _finish(op, X, Y, ex, ey, lo, hi, 1, rounding)


def bilinear_midpoint_radius(op: BilinearOp, X, Y, ex: int = 0, ey: int = 0,
                             rounding: Rounding = Rounding.FAST):
    """Midpoint-radius extension, valid when the coefficients of ``op`` are nonnegative.

    ``b(mX, mY) + [-1, 1] (b(rX, |mY|) + b(|mX|, rY) + b(rX, rY))``, dropping the
    terms that vanish when an argument is a point.
    """
    if not op.nonnegative:
        raise ValueError("midpoint-radius extension requires a bilinear op with nonnegative coefficients")
    X, Y = as_ti(X), as_ti(Y)
    ex, ey = _extra_ranks(op, X, Y, ex, ey)
    finite = np.isfinite(X.lo).all() and np.isfinite(X.hi).all() and np.isfinite(Y.lo).all() and np.isfinite(Y.hi).all()
    if not finite:
        return bilinear_signsplit(op, X, Y, ex, ey, rounding)
    mX, rX = X.mid(), X.rad()
    mY, rY = Y.mid(), Y.rad()
    center = as_tensor(op(mX, mY, ex, ey))
    x_point, y_point = X.is_point, Y.is_point
    spread = np.zeros_like(center)
    calls = 1
    if not x_point:
        spread = spread + op(rX, np.abs(mY), ex, ey)
        calls += 1
    if not y_point:
        spread = spread + op(np.abs(mX), rY, ex, ey)
        calls += 1
    if not x_point and not y_point:
        spread = spread + op(rX, rY, ex, ey)
        calls += 1
    return _finish(op, X, Y, ex, ey, center - spread, center + spread, calls, rounding)


def _signsplit_nonneg(op, X, Y, ex, ey):
    xl, xh, yl, yh = X.lo, X.hi, Y.lo, Y.hi
    b = lambda a, c: as_tensor(op(a, c, ex, ey))
    lo = b(_pos(xl), _pos(yl)) + b(_pos(xh), _neg(yl)) + b(_neg(xl), _pos(yh)) + b(_neg(xh), _neg(yh))
    hi = b(_pos(xh), _pos(yh)) + b(_pos(xl), _neg(yh)) + b(_neg(xh), _pos(yl)) + b(_neg(xl), _neg(yl))
    return lo, hi


def bilinear_signsplit(op: BilinearOp, X, Y, ex: int = 0, ey: int = 0, rounding: Rounding = Rounding.FAST):
    """Sign-split extension built from eight point evaluations of ``op``.

    Mixed-sign coefficients are handled by splitting ``W = W+ - W-`` and
    applying the construction to each nonnegative part.
    """
    X, Y = as_ti(X), as_ti(Y)
    ex, ey = _extra_ranks(op, X, Y, ex, ey)
    pos, neg = op.split()
    lo, hi = _signsplit_nonneg(pos, X, Y, ex, ey)
    calls = 8
    if neg is not None:
        nlo, nhi = _signsplit_nonneg(neg, X, Y, ex, ey)
        lo, hi = lo - nhi, hi - nlo
        calls = 16
    return _finish(op, X, Y, ex, ey, lo, hi, calls, rounding)


BILINEAR_STRATEGIES = {
    "naive": bilinear_naive,
    "midpoint_radius": bilinear_midpoint_radius,
    "signsplit": bilinear_signsplit,
}


def default_strategy(op: BilinearOp) -> str:
    return "midpoint_radius" if op.nonnegative else "signsplit"


def bilinear_interval(op: BilinearOp, X, Y, ex: int = 0, ey: int = 0, strategy: str | None = None,
                      rounding: Rounding = Rounding.FAST) -> TensorInterval:
    name = strategy or default_strategy(op)
    if name not in BILINEAR_STRATEGIES:
        raise ValueError(f"unknown bilinear strategy {name!r}; choose from {sorted(BILINEAR_STRATEGIES)}")
    if name == "midpoint_radius" and not op.nonnegative:
        raise ValueError("midpoint-radius extension requires nonnegative coefficients")
    return BILINEAR_STRATEGIES[name](op, X, Y, ex, ey, rounding=rounding)
