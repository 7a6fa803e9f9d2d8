import math

import numpy as np
import pytest

from oracles import mp_contains, mp_evaluate, random_nd_graph, random_tensor_graph, sample_box
from taylorenclose.enclosure1d import autobound_1d, poly_mul, IntervalPolynomial
from taylorenclose.enclosurend import (
    TaylorEnclosureND,
    TensorIntervalPolynomial as TIP,
    TraceND,
    autobound_nd,
    tip_add,
    tip_bilinear,
    tip_elementwise_fn,
    tip_elementwise_mul,
    tip_pow,
    tip_range_bound,
)
from taylorenclose.exprgraph import AtomicFn, GraphBuilder, evaluate, parse
from taylorenclose.interval import Interval, Rounding
from taylorenclose.tensorcore import BILINEAR_STRATEGIES, BilinearOp, ResourceLimitError, TensorInterval

E = math.e


def scalar_tip(poly: IntervalPolynomial) -> TIP:
    """A d=1 tensor polynomial with the same coefficients as a 1-D one."""
    cs = [TensorInterval(np.full((1,) * j, c.lo), np.full((1,) * j, c.hi)) for j, c in enumerate(poly)]
    return TIP((1,), (), tuple(cs))


def identity_tip(x0, k):
    d = len(x0)
    cs = [TensorInterval.point(np.asarray(x0, float)), TensorInterval.point(np.eye(d))]
    cs += [TensorInterval.zeros((d,) * (j + 1)) for j in range(2, k + 1)]
    return TIP((d,), (d,), tuple(cs))


def flat_coeffs_1d(enc):
    return [(c.lo, c.hi) for c in enc.coeffs]


def flat_coeffs_nd(enc):
    return [(float(c.lo.reshape(-1)[0]), float(c.hi.reshape(-1)[0])) for c in enc.coeffs]


class TestPolynomialOps:
    def test_range_bound_constant_and_identity(self):
        c = TensorInterval(np.array([1.0, -2.0]), np.array([1.5, -2.0]))
        P = TIP((3,), (2,), (c,))
        r = tip_range_bound(P, TensorInterval(-np.ones(3), np.ones(3)))
        assert np.array_equal(r.lo, c.lo) and np.array_equal(r.hi, c.hi)
        Z = TensorInterval(np.array([-1.0, 0.0]), np.array([1.0, 0.5]))
        r = tip_range_bound(identity_tip([2.0, 3.0], 1), Z)
        assert np.array_equal(r.lo, [1.0, 3.0]) and np.array_equal(r.hi, [3.0, 3.5])

    def test_add_is_coefficientwise(self):
        A = identity_tip([1.0, 2.0], 2)
        r = tip_add(A, A)
        assert np.array_equal(r[1].lo, 2 * np.eye(2)) and np.array_equal(r[0].lo, [2.0, 4.0])

    def test_elementwise_mul_matches_1d(self):
        Z = Interval(-1, 1)
        A = IntervalPolynomial.of(1, 1, Interval(1 / E, E - 2))
        B = IntervalPolynomial.of(0.5, -0.25, Interval(1 / 12, 1 / 4))
        want = poly_mul(A, B, Z, 2)
        got = tip_elementwise_mul(scalar_tip(A), scalar_tip(B), TensorInterval(np.array([-1.0]), np.array([1.0])), 2)
        for j in range(3):
            assert float(got[j].lo.reshape(-1)[0]) == want[j].lo
            assert float(got[j].hi.reshape(-1)[0]) == want[j].hi

    def test_pow_zero_is_one(self):
        A = identity_tip([0.5, 0.2], 2)
        r = tip_pow(A, 0, TensorInterval(-np.ones(2), np.ones(2)), 2)
        assert np.array_equal(r[0].lo, np.ones(2)) and all(not c.hi.any() for c in r.coeffs[1:])

    def test_elementwise_exp_lifts_sharp_enclosure(self):
        A = scalar_tip(IntervalPolynomial.of(0, 1, 0))
        Z = TensorInterval(np.array([-1.0]), np.array([1.0]))
        r = tip_elementwise_fn(AtomicFn.exp(), A, TensorInterval(np.array(-1.0), np.array(1.0)), Z, 2)
        assert float(r[0].lo) == 1.0 and float(r[1].lo[0]) == 1.0
        assert float(r[2].lo[0, 0]) == pytest.approx(1 / E, abs=1e-12)
        assert float(r[2].hi[0, 0]) == pytest.approx(E - 2, abs=1e-12)

    def test_bilinear_dot_of_linear_polynomials(self):
        # <x + a, M x + b> for 2-vectors x; cross term is x^T M x
        rng = np.random.default_rng(0)
        a, b, M = rng.normal(size=2), rng.normal(size=2), rng.normal(size=(2, 2))
        A = TIP((2,), (2,), (TensorInterval.point(a), TensorInterval.point(np.eye(2))))
        B = TIP((2,), (2,), (TensorInterval.point(b), TensorInterval.point(M)))
        Z = TensorInterval(-np.ones(2), np.ones(2))
        r = tip_bilinear(BilinearOp.dot(), A, B, Z, 2)
        assert r[0].lo == pytest.approx(a @ b)
        assert np.allclose(r[1].lo, b + M.T @ a) and r[1].is_point
        assert np.allclose(r[2].lo, M) and r[2].is_point

    def test_identity_polynomial_shape_checks(self):
        with pytest.raises(ValueError):
            TIP((2,), (), (TensorInterval.point(np.array(1.0)), TensorInterval.point(np.ones(3))))


class TestAutoBoundND:
    def test_dot_square_is_exact(self):
        b = GraphBuilder(input_shape=(2,))
        x = b.input()
        g = b.build(b.dot(x, x))
        enc = autobound_nd(g, np.zeros(2), (-1, 1), 2)
        assert float(enc.coeffs[0].lo) == 0.0
        assert not enc.coeffs[1].lo.any() and not enc.coeffs[1].hi.any()
        assert enc.coeffs[2].is_point and np.array_equal(enc.coeffs[2].lo, np.eye(2))

    def test_exp_of_product_contains_samples(self):
        g = parse("exp(x0*x1)")
        rng = np.random.default_rng(0)
        x0 = np.array([0.2, -0.1])
        trust = [(-0.5, 0.7), (-0.6, 0.4)]
        enc = autobound_nd(g, x0, trust, 2)
        for x in sample_box(rng, [-0.5, -0.6], [0.7, 0.4], 300):
            assert enc.bound_at(x).contains(np.array(evaluate(g, x)), atol=1e-12)

    @pytest.mark.parametrize("strategy", sorted(BILINEAR_STRATEGIES))
    def test_strategies_on_small_network(self, strategy):
        rng = np.random.default_rng(1)
        b = GraphBuilder(input_shape=(3,))
        x = b.input()
        W = b.const(np.abs(rng.normal(size=(2, 3))))
        h = b.softplus(b.matmul(W, x))
        v = b.const(np.abs(rng.normal(size=2)))
        g = b.build(b.dot(v, h))
        enc = autobound_nd(g, np.zeros(3), (-0.5, 0.5), 2, batched_strategy=strategy)
        for z in sample_box(rng, -0.5 * np.ones(3), 0.5 * np.ones(3), 100):
            assert enc.bound_at(z).contains(np.array(evaluate(g, z)), atol=1e-12)

    def test_leading_coefficients_degenerate(self):
        g = parse("softplus(x0*x1) + exp(x2)^2")
        enc = autobound_nd(g, np.array([0.1, 0.2, 0.3]), (-1, 1), 3)
        assert all(c.is_point for c in enc.coeffs[:3])

    def test_agrees_with_1d(self):
        for text in ("exp(x)/(2+x)", "exp(x^2)", "softplus(x)^2 - log(1+x^2)"):
            a = autobound_1d(text, 0.1, (-0.5, 0.6), 3)
            b = autobound_nd(text, [0.1], (-0.5, 0.6), 3)
            assert np.allclose(flat_coeffs_1d(a), flat_coeffs_nd(b), atol=1e-12, rtol=0)

    def test_json_round_trip(self):
        enc = autobound_nd("x0*exp(x1)", [0.0, 0.0], (-1, 1), 2)
        back = TaylorEnclosureND.from_json(enc.to_json())
        for c, d in zip(enc.coeffs, back.coeffs):
            assert np.array_equal(c.lo, d.lo) and np.array_equal(c.hi, d.hi)

    def test_trace(self):
        t = TraceND()
        autobound_nd("x0*x1", [0.0, 0.0], (-1, 1), 2, trace=t)
        assert len(t.polys) == 3 and t.ranges[-1].contains(np.array(1.0))

    def test_resource_limits(self):
        with pytest.raises(ResourceLimitError):
            autobound_nd("exp(x0+x1)", [0.0, 0.0], (-1, 1), 7)
        b = GraphBuilder(input_shape=(40,))
        x = b.input()
        g = b.build(b.exp(x))
        with pytest.raises(ResourceLimitError):
            autobound_nd(g, np.zeros(40), (-1, 1), 3)

    def test_errors(self):
        with pytest.raises(ValueError):
            autobound_nd("x0+x1", [2.0, 0.0], (-1, 1), 2)
        with pytest.raises(ValueError):
            autobound_nd("x0+x1", [0.0, 0.0], (-1, 1), 0)

    @pytest.mark.parametrize("seed", range(20))
    def test_outward_containment_random_graphs(self, seed):
        rng = np.random.default_rng(500 + seed)
        d = int(rng.integers(1, 4))
        g = random_nd_graph(rng, d)
        lo = rng.uniform(-1, 0, size=d)
        hi = lo + rng.uniform(0.05, 1, size=d)
        x0 = rng.uniform(lo, hi)
        enc = autobound_nd(g, x0, list(zip(lo, hi)), int(rng.integers(1, 4)), rounding=Rounding.OUTWARD)
        for x in sample_box(rng, lo, hi, 50):
            assert mp_contains(enc.bound_at(x, Rounding.OUTWARD)[()], mp_evaluate(g, x))

    @pytest.mark.parametrize("seed", range(10))
    def test_tensor_input_graphs(self, seed):
        rng = np.random.default_rng(900 + seed)
        d = int(rng.integers(1, 4))
        g = random_tensor_graph(rng, d)
        lo = rng.uniform(-1, 0, size=d)
        hi = lo + rng.uniform(0.05, 1, size=d)
        x0 = rng.uniform(lo, hi)
        enc = autobound_nd(g, x0, list(zip(lo, hi)), 2)
        for x in sample_box(rng, lo, hi, 50):
            v = np.asarray(evaluate(g, x))
            assert enc.bound_at(x).contains(v, atol=1e-12 * (1 + np.abs(v).max()))
