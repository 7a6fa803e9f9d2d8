"""Majorization-minimisation with automatically derived quadratic majorizers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..enclosure1d import autobound_1d
from ..exprgraph import evaluate, parse
from ..interval import Interval, Rounding
from .bnb import quad_bound_extrema


@dataclass(frozen=True)
class MMStep:
    t: int
    x: float
    f: float
    bound: float
    majorizer: tuple = ()


@dataclass
class MMTrace:
    steps: list = field(default_factory=list)

    @property
    def x(self) -> float:
        return self.steps[-1].x

    @property
    def f(self) -> float:
        return self.steps[-1].f

    def rows(self):
        return [(s.t, s.x, s.f) for s in self.steps]


def mm_minimize(g, x0: float, trust_radius: float, steps: int = 10, domain=None,
                rounding: Rounding | str = Rounding.FAST) -> MMTrace:
    """Minimise ``g`` by repeatedly minimising a quadratic upper bound.

    At iterate ``x_t`` a degree-2 enclosure over ``[x_t - r, x_t + r]`` gives
    ``f(x) <= c0 + c1 z + hi(I) z^2``; its exact minimiser is the next iterate,
    so ``f`` never increases. A candidate that does not decrease ``f`` in
    floating point is rejected. Iteration stops early at a fixed point.

    Args:
        domain: Optional interval the trust windows are clipped to.
    """
    if isinstance(g, str):
        g = parse(g)
    rounding = Rounding.parse(rounding)
    if not trust_radius > 0 or not math.isfinite(trust_radius):
        raise ValueError("trust radius must be a positive real")
    if int(steps) != steps or steps < 0:
        raise ValueError("steps must be a nonnegative integer")
    dom = None if domain is None else Interval.coerce(domain)
    x = float(x0)
    fx = evaluate(g, x)
    trace = MMTrace([MMStep(0, x, fx, fx)])
    for t in range(1, int(steps) + 1):
        lo, hi = x - trust_radius, x + trust_radius
        if dom is not None:
            lo, hi = max(lo, dom.lo), min(hi, dom.hi)
        enc = autobound_1d(g, x, Interval(lo, hi), 2, rounding)
        xn, ub = quad_bound_extrema(enc, "upper")
        fn = evaluate(g, xn)
        if not fn <= fx:
            xn, fn = x, fx
        c0, c1, I = enc.coeffs
        # majorizer c0 + c1 (x - x_t) + c2 (x - x_t)^2, centred at the previous iterate
        trace.steps.append(MMStep(t, xn, fn, ub, (c0.hi, c1.hi, I.hi)))
        if xn == x:
            break
        x, fx = xn, fn
    return trace
