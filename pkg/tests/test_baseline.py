import math

import pytest

from taylorenclose.baseline import baseline_enclosure, lagrange_remainder, taylor_series
from taylorenclose.enclosure1d import autobound_1d
from taylorenclose.exprgraph import parse
from taylorenclose.interval import Interval


class TestTaylorSeries:
    def test_point_series_are_taylor_coefficients(self):
        c = taylor_series(parse("exp(x)"), Interval.point(0.0), 4)
        for i, ci in enumerate(c):
            assert ci.lo == pytest.approx(1 / math.factorial(i), rel=1e-15)
        c = taylor_series(parse("log(x)"), Interval.point(1.0), 3)
        assert [ci.lo for ci in c] == pytest.approx([0.0, 1.0, -0.5, 1 / 3])

    def test_softplus_series(self):
        c = taylor_series(parse("softplus(x)"), Interval.point(0.0), 2)
        assert c[0].lo == pytest.approx(math.log(2)) and c[1].lo == pytest.approx(0.5)
        assert c[2].lo == pytest.approx(1 / 8)


class TestLagrangeBaseline:
    def test_monomials(self):
        eps = 0.01
        r = lagrange_remainder("x^3", (-eps, eps), 2)
        assert r.lo == pytest.approx(-3 * eps) and r.hi == pytest.approx(3 * eps)
        r = lagrange_remainder("x^5", (-eps, eps), 2)
        assert r.lo == pytest.approx(-10 * eps ** 3) and r.hi == pytest.approx(10 * eps ** 3)

    def test_exp_ratio_example_close_to_reference(self):
        r = baseline_enclosure("exp(x)/(2+x)", 0.0, (-1, 1), 2).remainder
        assert r.lo == pytest.approx(-2.64, abs=0.01) and r.hi == pytest.approx(4.04, abs=0.01)

    def test_baseline_contains_sharp_remainder(self):
        for text, x0, trust in [("exp(x)/(2+x)", 0.0, (-1, 1)), ("exp(x^2)", 0.2, (-0.5, 0.5)),
                                ("softplus(x)*log(2+x)", 0.1, (-0.5, 1.0))]:
            ours = autobound_1d(text, x0, trust, 2).remainder
            base = baseline_enclosure(text, x0, trust, 2).remainder
            assert base.lo <= ours.lo and ours.hi <= base.hi
