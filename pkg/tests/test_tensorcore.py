import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import corner_hull, random_bilinear_instance, random_ti
from taylorenclose.interval import Interval, Rounding
from taylorenclose.tensorcore import (
    BilinearOp,
    ResourceLimitError,
    TensorInterval,
    batched_outer,
    bilinear_interval,
    bilinear_midpoint_radius,
    bilinear_naive,
    bilinear_signsplit,
    check_rank,
    inner,
    outer,
    outer_power,
    power_s,
    tensor_from_json,
    tensor_to_json,
    ti_add,
    ti_map_monotone,
    ti_mul,
    ti_pow,
)

STRATEGIES = (bilinear_naive, bilinear_midpoint_radius, bilinear_signsplit)


def ti(lo, hi):
    return TensorInterval(np.asarray(lo, float), np.asarray(hi, float))


class TestTensorInterval:
    def test_rejects_bad_bounds(self):
        with pytest.raises(ValueError):
            ti([1.0, 2.0], [0.0, 3.0])
        with pytest.raises(ValueError):
            TensorInterval(np.zeros(2), np.zeros(3))

    def test_indexing_gives_interval(self):
        X = ti([[0, 1], [2, 3]], [[1, 1], [4, 5]])
        assert X[1, 0] == Interval(2, 4)
        assert X[0].shape == (2,)

    def test_json_round_trip(self):
        X = ti([[0, -np.inf]], [[1, 2]])
        obj = X.to_json()
        assert obj["shape"] == [1, 2]
        back = TensorInterval.from_json(obj)
        assert np.array_equal(back.lo, X.lo) and np.array_equal(back.hi, X.hi)
        t = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(tensor_from_json(tensor_to_json(t)), t)

    def test_rank_cap(self):
        with pytest.raises(ResourceLimitError):
            check_rank((1,) * 7)


class TestElementwise:
    def test_pow_uses_exponentiation_rule(self):
        X = ti(np.full(3, -3.0), np.full(3, 3.0))
        r = ti_pow(X, 2)
        assert np.array_equal(r.lo, np.zeros(3)) and np.array_equal(r.hi, np.full(3, 9.0))

    def test_monotone_map(self):
        r = ti_map_monotone(np.exp, ti([0, 1], [0, 1]))
        assert np.allclose(r.lo, [1, np.e]) and np.allclose(r.hi, [1, np.e])

    def test_point_products(self):
        a, b = np.array([1.5, -2.0]), np.array([4.0, 3.0])
        r = ti_mul(TensorInterval.point(a), TensorInterval.point(b))
        assert np.array_equal(r.lo, a * b) and r.is_point

    def test_add(self):
        r = ti_add(ti([0, 1], [1, 2]), ti([1, 1], [2, 3]))
        assert np.array_equal(r.lo, [1, 2]) and np.array_equal(r.hi, [3, 5])


class TestProducts:
    def test_inner_examples(self):
        assert np.array_equal(inner(np.array([[1.0, 2.0], [3.0, 4.0]]), np.ones(2)), [3.0, 7.0])
        r = inner(ti([0.0], [2.0]), np.array([3.0]))
        assert r[()] == Interval(0, 6)

    def test_outer_examples(self):
        assert np.array_equal(outer(np.array([1.0, 2.0]), np.array([3.0, 4.0])), [[3, 4], [6, 8]])
        A = np.arange(4.0).reshape(2, 2)
        assert np.array_equal(outer(A, np.array(1.0)), A)

    def test_batched_outer_shape(self):
        A, B = np.ones((2, 3)), np.ones((2, 4))
        assert batched_outer(A, B, 1).shape == (2, 3, 4)
        with pytest.raises(ValueError):
            batched_outer(np.ones((2, 3)), np.ones((3, 3)), 1)

    @pytest.mark.parametrize("seed", range(25))
    def test_dot_product_exactness(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 9))
        X, y = random_ti(rng, (n,)), rng.normal(size=n)
        lo, hi = corner_hull(lambda a, b: a @ b, X, TensorInterval.point(y))
        r = inner(X, y)
        assert r.lo == pytest.approx(lo, abs=1e-12) and r.hi == pytest.approx(hi, abs=1e-12)

    @pytest.mark.parametrize("seed", range(25))
    def test_inner_outer_identity(self, seed):
        rng = np.random.default_rng(seed)
        sb = tuple(rng.integers(1, 4, size=int(rng.integers(0, 3))))
        sc = tuple(rng.integers(1, 4, size=int(rng.integers(0, 3))))
        so = tuple(rng.integers(1, 3, size=int(rng.integers(0, 2))))
        A = rng.normal(size=so + sb + sc)
        B, C = rng.normal(size=sb), rng.normal(size=sc)
        assert np.allclose(inner(A, outer(B, C)), inner(inner(A, C), B), atol=1e-12, rtol=0)

    def test_outer_power_associativity(self):
        rng = np.random.default_rng(3)
        Z = rng.normal(size=3)
        for p, k in [(3, 1), (4, 2), (2, 2)]:
            lhs = outer_power(Z, p).lo
            rhs = outer(outer_power(Z, k).lo, outer_power(Z, p - k).lo)
            assert np.allclose(lhs, rhs, atol=1e-12)

    def test_power_s_is_exact_per_monomial(self):
        Z = ti([-1.0, 0.5], [2.0, 1.0])
        P = outer_power(Z, 2)
        assert P[0, 0] == Interval(0, 4)  # z0^2
        assert P[0, 1] == Interval(-1, 2)  # z0 z1
        assert P[1, 1] == Interval(0.25, 1)
        assert power_s(Z, 0, 0)[()] == Interval(1, 1)


def _free(X):
    return int((X.lo != X.hi).sum())


class TestBilinear:
    def test_dot_examples(self):
        op, X, Y = BilinearOp.dot(), ti([0.0], [2.0]), ti([1.0], [3.0])
        assert bilinear_naive(op, X, Y)[()] == Interval(0, 6)
        assert bilinear_midpoint_radius(op, X, Y)[()] == Interval(-2, 6)
        assert bilinear_signsplit(op, X, Y)[()] == Interval(0, 6)

    def test_signsplit_scalar_case(self):
        r = bilinear_signsplit(BilinearOp.dot(), ti([-2.0], [3.0]), ti([-5.0], [7.0]))
        assert r[()] == Interval(-29, 31)

    def test_singleton_simplification(self):
        op = BilinearOp.dot()
        r = bilinear_midpoint_radius(op, ti([1.0], [1.0]), ti([1.0], [3.0]))
        assert r[()] == Interval(1, 3)
        x, y = np.array([1.5, -2.0]), np.array([0.5, 4.0])
        for f in STRATEGIES:
            assert f(op, TensorInterval.point(x), TensorInterval.point(y))[()] == Interval.point(x @ y)

    def test_sign_definite_signsplit_matches_naive(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            X = TensorInterval(rng.uniform(0.1, 1, 4), rng.uniform(1, 2, 4))
            Y = TensorInterval(rng.uniform(-2, -1, 4), rng.uniform(-1, -0.1, 4))
            a = bilinear_signsplit(BilinearOp.dot(), X, Y)
            b = bilinear_naive(BilinearOp.dot(), X, Y)
            assert np.allclose(a.lo, b.lo, atol=1e-12) and np.allclose(a.hi, b.hi, atol=1e-12)

    def test_midpoint_radius_rejects_negative_weights(self):
        op = BilinearOp.general(np.array([[[1.0, -1.0]]]))
        with pytest.raises(ValueError):
            bilinear_midpoint_radius(op, ti([0, 0], [1, 1]), ti([0], [1]))
        assert bilinear_interval(op, ti([0, 0], [1, 1]), ti([0], [1])).shape == (1,)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_all_strategies_contain_corner_hull(self, seed):
        rng = np.random.default_rng(seed)
        op, X, Y = random_bilinear_instance(rng)
        if _free(X) + _free(Y) > 16:
            return
        lo, hi = corner_hull(op, X, Y)
        for f in STRATEGIES:
            if f is bilinear_midpoint_radius and not op.nonnegative:
                continue
            r = f(op, X, Y, rounding=Rounding.OUTWARD)
            assert (r.lo <= lo + 1e-12).all() and (hi - 1e-12 <= r.hi).all(), f.__name__

    def test_general_w_matches_definition(self):
        rng = np.random.default_rng(11)
        W = rng.normal(size=(2, 3, 4))
        x, y = rng.normal(size=4), rng.normal(size=3)
        op = BilinearOp.general(W)
        assert np.allclose(op(x, y), inner(inner(W, x), y))
        assert BilinearOp.from_json(op.to_json()) == op

    def test_extra_batch_axes(self):
        rng = np.random.default_rng(5)
        X = random_ti(rng, (3, 2))  # one extra trailing axis on x
        Y = random_ti(rng, (3,))
        r = bilinear_naive(BilinearOp.dot(), X, Y, ex=1)
        assert r.shape == (2,)
        for j in range(2):
            xs = TensorInterval(X.lo[:, j], X.hi[:, j])
            s = bilinear_naive(BilinearOp.dot(), xs, Y)
            assert r[j] == s[()]
