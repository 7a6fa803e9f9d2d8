import math

import numpy as np
import pytest
from scipy import integrate

from oracles import MM_CORPUS
from taylorenclose.apps import (
    Discrete,
    Uniform,
    branch_and_bound,
    integrate_enclosure,
    integration_trace,
    jensen_bounds,
    jensen_trace,
    mm_minimize,
    parse_distribution,
    quad_bound_extrema,
)
from taylorenclose.enclosure1d import IntervalPolynomial, TaylorEnclosure1D
from taylorenclose.exprgraph import DomainError, evaluate, parse
from taylorenclose.interval import Interval

TRUE_GAP = (math.e - 1 / math.e) / 2 - 1

def enc2(c0, c1, I, trust=(-1, 1), x0=0.0):
    return TaylorEnclosure1D(x0, Interval(*trust), IntervalPolynomial.of(c0, c1, I))


class TestQuadBoundExtrema:
    def test_examples(self):
        assert quad_bound_extrema(enc2(0, 0, Interval(1, 2)), "lower") == (0.0, 0.0)
        x, v = quad_bound_extrema(enc2(0, 1, Interval(1, 1)), "lower")
        assert (x, v) == (-0.5, -0.25)
        x, v = quad_bound_extrema(enc2(0, 1, Interval(0, 0)), "lower")
        assert (x, v) == (-1.0, -1.0)

    def test_upper_and_absolute_coordinates(self):
        x, v = quad_bound_extrema(enc2(1, -2, Interval(0, 1), trust=(1, 3), x0=2.0), "upper")
        assert (x, v) == (3.0, 0.0)

    def test_rejects_other_degrees(self):
        e = TaylorEnclosure1D(0.0, Interval(-1, 1), IntervalPolynomial.of(0, 1))
        with pytest.raises(ValueError):
            quad_bound_extrema(e)


class TestBranchAndBound:
    def test_cubic_endpoint_minimum(self):
        r = branch_and_bound("2*(x-1)^2+(x-1)^3", (-2, 2), 1e-9, 50)
        assert r.converged and r.xbest == pytest.approx(-2, abs=1e-9) and r.fbest == pytest.approx(-9, abs=1e-9)

    def test_convex_and_monotone(self):
        r = branch_and_bound("(x-0.3)^2", (-1, 1), 1e-9)
        assert r.xbest == pytest.approx(0.3, abs=1e-4) and r.fbest <= 1e-9 and r.gap <= 1e-9
        r = branch_and_bound("exp(x)", (0, 1), 1e-9)
        assert r.xbest == 0.0 and r.fbest == 1.0

    @pytest.mark.parametrize("text,trust", [
        ("x^4 - 3*x^2 + x", (-2, 2)),
        ("softplus(3*x) - x^2", (-1.5, 2)),
        ("log(1+x^2) - 0.4*x", (-3, 3)),
    ])
    def test_sandwich_against_grid(self, text, trust):
        g = parse(text)
        grid = np.linspace(*trust, 100_000)
        fmin = min(evaluate(g, x) for x in grid)
        r = branch_and_bound(g, trust, 1e-8, 2000)
        assert r.converged
        for step, lb, ub in r.trace:
            assert lb <= fmin + 1e-12
            assert ub >= fmin - 1e-6
        assert r.fbest == pytest.approx(fmin, abs=1e-6)

    def test_step_budget(self):
        r = branch_and_bound("x^4 - 3*x^2 + x", (-2, 2), 1e-12, 3)
        assert not r.converged and r.steps == 3 and r.lower_bound <= r.fbest

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValueError):
            branch_and_bound("x", (0, 1), -1.0)


class TestIntegration:
    @pytest.mark.parametrize("text,a,b", [("exp(x)", 0, 1), ("softplus(x)^2", -1, 2), ("1/(1+x^2)", -2, 2)])
    def test_contains_quadrature_and_refines(self, text, a, b):
        g = parse(text)
        truth, err = integrate.quad(lambda t: evaluate(g, t), a, b, epsabs=1e-13, epsrel=1e-13, limit=200)
        assert err < 1e-12
        for k in (1, 2, 3):
            widths = []
            for n, I in integration_trace(g, a, b, [1, 2, 4, 8, 16, 32], k):
                assert I.lo - 1e-13 <= truth <= I.hi + 1e-13, (text, k, n)
                widths.append(I.hi - I.lo)
            assert all(w2 <= w1 for w1, w2 in zip(widths, widths[1:]))

    def test_examples(self):
        I = integrate_enclosure("exp(x)", 0, 1, 16, 2)
        assert I.lo <= math.e - 1 <= I.hi
        assert integrate_enclosure("0*x + 2.5", 0, 1, 7, 2) == Interval(2.5, 2.5)
        w16 = integrate_enclosure("exp(x)", 0, 1, 16, 2)
        w32 = integrate_enclosure("exp(x)", 0, 1, 32, 2)
        assert w32.hi - w32.lo < w16.hi - w16.lo

    def test_errors(self):
        with pytest.raises(DomainError):
            integrate_enclosure("log(x)", -1, 1, 4)
        with pytest.raises(ValueError):
            integrate_enclosure("x", 1, 0, 4)
        with pytest.raises(ValueError):
            integrate_enclosure("x", 0, 1, 0)


class TestJensen:
    def test_degree_two_closed_form(self):
        r = jensen_bounds("exp(x)", Uniform(-1, 1), 2)
        assert r.gap.lo == pytest.approx(1 / (3 * math.e), abs=1e-12)
        assert r.gap.hi == pytest.approx((math.e - 2) / 3, abs=1e-12)

    def test_nesting(self):
        rows = jensen_trace("exp(x)", "uniform:-1,1", range(2, 9))
        for k, r in rows:
            assert r.gap.lo <= TRUE_GAP <= r.gap.hi
            assert r.expectation.lo <= math.sinh(1) <= r.expectation.hi
        widths = [r.gap.hi - r.gap.lo for _, r in rows]
        assert all(b < a for a, b in zip(widths, widths[1:]))

    def test_affine_has_zero_gap(self):
        r = jensen_bounds("3*x + 1", Discrete((0.0, 1.0, 5.0), (1, 2, 1)), 3)
        assert r.gap.lo == pytest.approx(0, abs=1e-15) and r.gap.hi == pytest.approx(0, abs=1e-15)

    def test_discrete_moments(self):
        d = Discrete((-1.0, 0.0, 2.0), (0.25, 0.5, 0.25))
        assert d.mean == 0.25
        assert d.central_moment(2) == pytest.approx(0.25 * 1.5625 + 0.5 * 0.0625 + 0.25 * 3.0625)
        g = parse("exp(x)")
        truth = sum(w * math.exp(p) for p, w in zip(d.points, d.weights)) - math.exp(d.mean)
        for k in range(2, 7):
            r = jensen_bounds(g, d, k)
            assert r.gap.lo <= truth <= r.gap.hi

    def test_uniform_one_sided_moments(self):
        u = Uniform(-1, 1)
        assert u.one_sided_moments(3) == (-1 / 8, 1 / 8)
        assert u.one_sided_moments(2) == (0.0, 1 / 3)

    def test_parse_and_errors(self):
        assert parse_distribution("uniform:-1,1") == Uniform(-1.0, 1.0)
        assert parse_distribution("discrete:0:1,2:3").weights == (0.25, 0.75)
        for bad in ("normal:0,1", "uniform:1,0", "discrete:0:-1"):
            with pytest.raises(ValueError):
                parse_distribution(bad)
        with pytest.raises(ValueError):
            jensen_bounds("exp(x)", Uniform(-1, 1), 1)


class TestMM:
    def test_quadratic_converges_immediately(self):
        tr = mm_minimize("(x-1)^2", 0.0, 2.0, 3)
        assert tr.x == 1.0 and tr.f == 0.0 and len(tr.steps) <= 4

    def test_figure_function_strictly_decreases(self):
        tr = mm_minimize("3/2*exp(3*x) - 25*x^2", 0.5, 0.5, 8)
        fs = [s.f for s in tr.steps]
        assert all(b < a for a, b in zip(fs, fs[1:]))

    def test_exp_marches_left(self):
        tr = mm_minimize("exp(x)", 0.0, 1.0, 5)
        xs = [s.x for s in tr.steps]
        assert all(b < a for a, b in zip(xs, xs[1:]))

    @pytest.mark.parametrize("text,x0,r", MM_CORPUS)
    def test_monotone(self, text, x0, r):
        tr = mm_minimize(text, x0, r, 25)
        for a, b in zip(tr.steps, tr.steps[1:]):
            assert b.f <= a.f + 1e-12
            assert b.f <= b.bound + 1e-12

    def test_majorizer_is_an_upper_bound(self):
        g = parse("3/2*exp(3*x) - 25*x^2")
        tr = mm_minimize(g, 0.5, 0.5, 4)
        for prev, step in zip(tr.steps, tr.steps[1:]):
            c0, c1, c2 = step.majorizer
            for x in np.linspace(prev.x - 0.5, prev.x + 0.5, 101):
                z = x - prev.x
                assert evaluate(g, x) <= c0 + c1 * z + c2 * z * z + 1e-12

    def test_errors(self):
        with pytest.raises(ValueError):
            mm_minimize("x^2", 0.0, 0.0)
        with pytest.raises(DomainError):
            mm_minimize("log(x)", 0.5, 1.0)
