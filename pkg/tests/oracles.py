"""Independent reference computations used by the test-suite.

Nothing here calls the enclosure engines; these are brute-force or
high-precision recomputations used to check them.
"""

import itertools
import math

import mpmath
import numpy as np

from taylorenclose.exprgraph import GraphBuilder
from taylorenclose.tensorcore import BilinearOp, TensorInterval

mpmath.mp.dps = 50


def corner_hull(op, X, Y):
    """Exact range of a bilinear op over a box, by enumerating vertices.

    A bilinear function is affine in every coordinate separately, so its
    extremes over a box are attained at vertices.
    """
    free_x = [i for i in np.ndindex(X.shape) if X.lo[i] != X.hi[i]]
    free_y = [i for i in np.ndindex(Y.shape) if Y.lo[i] != Y.hi[i]]
    assert len(free_x) + len(free_y) <= 16
    lo = hi = None
    for bits in itertools.product((0, 1), repeat=len(free_x) + len(free_y)):
        xc, yc = X.lo.copy(), Y.lo.copy()
        for b, i in zip(bits[: len(free_x)], free_x):
            if b:
                xc[i] = X.hi[i]
        for b, i in zip(bits[len(free_x):], free_y):
            if b:
                yc[i] = Y.hi[i]
        v = np.asarray(op(xc, yc), dtype=float)
        lo = v if lo is None else np.minimum(lo, v)
        hi = v if hi is None else np.maximum(hi, v)
    return lo, hi


def random_ti(rng, shape, scale=2.0, point_frac=0.3):
    """Random tensor interval; about ``point_frac`` of the entries are points."""
    lo = rng.uniform(-scale, scale, size=shape)
    w = rng.uniform(0, scale, size=shape) * (rng.random(shape) > point_frac)
    return TensorInterval(lo, lo + w)


def random_bilinear_instance(rng):
    """A random (op, X, Y) triple: dot, matrix-vector, matrix-matrix or general W."""
    kind = int(rng.integers(4))
    if kind == 0:
        n = int(rng.integers(1, 9))
        return BilinearOp.dot(), random_ti(rng, (n,)), random_ti(rng, (n,))
    if kind == 1:
        m, n = int(rng.integers(1, 3)), int(rng.integers(1, 4))
        return BilinearOp.matmul(), random_ti(rng, (m, n)), random_ti(rng, (n,))
    if kind == 2:
        m, n, p = (int(v) for v in rng.integers(1, 3, size=3))
        return BilinearOp.matmul(), random_ti(rng, (m, n), point_frac=0.6), random_ti(rng, (n, p), point_frac=0.6)
    n, m, o = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 3))
    W = rng.uniform(0, 1, size=(o, m, n)) if rng.random() < 0.5 else rng.normal(size=(o, m, n))
    return BilinearOp.general(W), random_ti(rng, (n,)), random_ti(rng, (m,))


def free_entries(X) -> int:
    return int((X.lo != X.hi).sum())


# ---------------------------------------------------------------------------
# high-precision remainder ratios

MP_FUNCS = {
    "exp": mpmath.exp,
    "log": mpmath.log,
    "reciprocal": lambda y: 1 / y,
    "softplus": lambda y: mpmath.log(1 + mpmath.exp(y)),
}


def mp_taylor(f, y0, k):
    """Taylor coefficients ``f^(i)(y0)/i!`` for i < k, in mpmath."""
    return [mpmath.diff(f, y0, i) / mpmath.factorial(i) for i in range(k)]


def remainder_ratio_range(name, y0, lo, hi, k, n=10_000):
    """Extremes of ``(f(y) - T_{k-1}(y)) / (y - y0)^k`` on an ``n``-point grid."""
    f = MP_FUNCS[name]
    y0m = mpmath.mpf(y0)
    coeffs = mp_taylor(f, y0m, k)
    vals = []
    for y in np.linspace(lo, hi, n):
        ym = mpmath.mpf(float(y))
        d = ym - y0m
        if abs(d) < mpmath.mpf("1e-8"):
            continue
        t = sum(c * d ** i for i, c in enumerate(coeffs))
        vals.append((f(ym) - t) / d ** k)
    return float(min(vals)), float(max(vals))


# ---------------------------------------------------------------------------
# random expression corpora

# (expression, x0, trust radius) for majorization-minimization runs
MM_CORPUS = [
    ("(x-1)^2", 0.0, 2.0),
    ("3/2*exp(3*x) - 25*x^2", 0.5, 0.5),
    ("exp(x)", 0.0, 1.0),
    ("x^4 - 3*x^2 + x", 1.5, 0.5),
    ("softplus(x) - 0.3*x", 2.0, 1.0),
    ("log(1 + x^2) + 0.1*x", 1.2, 0.4),
    ("sqrt(1 + x^2) - 0.5*x", -1.0, 1.0),
    ("exp(-x^2)*(-1) + 0.05*x^2", 0.8, 0.3),
    ("1/(1 + exp(-x)) + 0.2*x^2", 1.0, 1.0),
    ("relu(x - 0.5)^2 + 0.1*(x+1)^2", 2.0, 1.0),
]



def random_expression(rng, depth=3):
    """A random univariate expression string that is defined on all of R."""
    if depth == 0 or rng.random() < 0.25:
        return "x" if rng.random() < 0.75 else f"{rng.uniform(-2, 2):.3f}"
    e = lambda: random_expression(rng, depth - 1)
    choice = rng.integers(13)
    if choice == 0:
        return f"exp(0.5*({e()}))"
    if choice == 1:
        return f"log(1+({e()})^2)"
    if choice == 2:
        return f"1/(2+softplus({e()}))"
    if choice == 3:
        return f"sqrt(1+({e()})^2)"
    if choice == 4:
        return f"softplus({e()})"
    if choice == 5:
        return f"relu({e()})"
    if choice == 6:
        return f"({e()})^{int(rng.integers(2, 4))}"
    if choice == 7:
        return f"({e()})*({e()})"
    if choice == 8:
        return f"({e()})+({e()})"
    if choice == 9:
        return f"({e()})-({e()})"
    if choice == 10:
        return f"{rng.uniform(-2, 2):.3f}*({e()})"
    if choice == 11:
        return f"({e()})/(1+exp({e()}))"
    return f"exp(-({e()})^2)"


def random_trust(rng, lo=-1.0, hi=1.0):
    a, b = np.sort(rng.uniform(lo, hi, size=2))
    if b - a < 1e-3:
        b = a + 0.1
    x0 = float(rng.uniform(a, b))
    return x0, (float(a), float(b))


def _unary(rng, b, v):
    c = int(rng.integers(7))
    if c == 0:
        return b.exp(b.mul_const(v, 0.5))
    if c == 1:
        return b.softplus(v)
    if c == 2:
        return b.pow(v, int(rng.integers(2, 4)))
    if c == 3:
        return b.log(b.add_const(b.pow(v, 2), 1.0))
    if c == 4:
        return b.reciprocal(b.add_const(b.softplus(v), 1.0))
    if c == 5:
        return b.relu(v)
    return b.add_const(b.mul_const(v, float(rng.uniform(-2, 2))), float(rng.uniform(-1, 1)))


def random_nd_graph(rng, d, nodes=6):
    """A random graph with ``d`` scalar inputs built from every elementwise kind."""
    b = GraphBuilder(num_inputs=d)
    pool = [b.input(i) for i in range(d)]
    for _ in range(nodes):
        if rng.random() < 0.5 and len(pool) > 1:
            i, j = rng.choice(len(pool), size=2, replace=False)
            v = b.mul(pool[i], pool[j]) if rng.random() < 0.5 else b.add(pool[i], pool[j])
        else:
            v = _unary(rng, b, pool[int(rng.integers(len(pool)))])
        pool.append(v)
    # make sure every input reaches the output
    out = pool[-1]
    for i in range(d):
        out = b.add(out, b.mul_const(pool[i], float(rng.uniform(-1, 1))))
    return b.build(out)


def random_tensor_graph(rng, d):
    """A random graph on a single ``(d,)`` input ending in a scalar."""
    b = GraphBuilder(input_shape=(d,))
    x = b.input()
    kind = int(rng.integers(3))
    if kind == 0:
        b.softplus(b.dot(_unary(rng, b, x), x))
    elif kind == 1:
        W = b.const(rng.uniform(-1, 1, size=(2, d)))
        h = b.softplus(b.matmul(W, x))
        v = b.const(rng.uniform(-1, 1, size=(2,)))
        b.dot(v, h)
    else:
        u = b.exp(b.mul_const(x, 0.5))
        b.dot(u, b.add_const(x, 1.0))
    return b.build()


def sample_box(rng, lo, hi, n):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    pts = rng.uniform(lo, hi, size=(n,) + lo.shape)
    # include the corners' extremes on a few samples
    pts[0], pts[1] = lo, hi
    return pts


def finite_difference_coeffs(f, x0, k, h=1e-3):
    """Taylor coefficients of a scalar function from mpmath numerical differentiation."""
    return [float(mpmath.diff(lambda t: f(float(t)), x0, i, h=h) / math.factorial(i)) for i in range(k)]


def mp_evaluate(g, x):
    """Evaluate a scalar-input graph in 50-digit arithmetic."""
    from taylorenclose.exprgraph import Kind

    xs = [x] if g.num_inputs == 1 and np.ndim(x) == 0 else list(x)
    vals = [mpmath.mpf(float(v)) for v in xs]
    for eq in g.equations:
        fn, a = eq.fn, [vals[i] for i in eq.args]
        k = fn.kind
        if k is Kind.EXP:
            v = mpmath.exp(a[0])
        elif k is Kind.LOG:
            v = mpmath.log(a[0])
        elif k is Kind.POW:
            v = a[0] ** (int(fn.param) if float(fn.param).is_integer() else mpmath.mpf(fn.param))
        elif k is Kind.RECIPROCAL:
            v = 1 / a[0]
        elif k is Kind.SOFTPLUS:
            v = mpmath.log1p(mpmath.exp(a[0]))
        elif k is Kind.RELU:
            v = max(a[0], mpmath.mpf(0))
        elif k is Kind.ADD_CONST:
            v = a[0] + mpmath.mpf(fn.param)
        elif k is Kind.MUL_CONST:
            v = a[0] * mpmath.mpf(fn.param)
        elif k is Kind.NEGATE:
            v = -a[0]
        elif k is Kind.ADD:
            v = a[0] + a[1]
        elif k is Kind.MUL:
            v = a[0] * a[1]
        elif k is Kind.CONST:
            v = mpmath.mpf(float(fn.param))
        else:
            raise NotImplementedError(k)
        vals.append(v)
    return vals[-1]


def mp_contains(I, v) -> bool:
    """``v`` (an mpf) lies in the float interval ``I``."""
    return mpmath.mpf(I.lo) <= v <= mpmath.mpf(I.hi)
