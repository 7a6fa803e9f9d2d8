"""Two-sided bounds on the Jensen gap ``E[f(X)] - f(E[X])``.

With a degree-k enclosure of ``f`` at ``mu = E[X]`` over the support of ``X``,

    E[f(X)] in f(mu) + sum_{2<=i<k} c_i E[(X-mu)^i]
               + I * E[min(0, (X-mu)^k)] + I * E[max(0, (X-mu)^k)]

since ``I * t`` for ``t <= 0`` and ``t >= 0`` are bounded separately. The
linear term vanishes because ``E[X - mu] = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..enclosure1d import TaylorEnclosure1D, autobound_1d
from ..exprgraph import parse
from ..interval import ZERO, Interval, Rounding, iv_add, iv_mul, widen


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"uniform distribution needs finite a < b, got {self.a}, {self.b}")

    @property
    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def support(self) -> Interval:
        return Interval(self.a, self.b)

    def central_moment(self, i: int) -> float:
        """``E[(X - mu)^i]``."""
        if i % 2:
            return 0.0
        h = 0.5 * (self.b - self.a)
        return h ** i / (i + 1)

    def one_sided_moments(self, k: int) -> tuple[float, float]:
        """``(E[min(0, (X-mu)^k)], E[max(0, (X-mu)^k)])``."""
        h = 0.5 * (self.b - self.a)
        if k % 2 == 0:
            return 0.0, h ** k / (k + 1)
        half = h ** k / (2 * (k + 1))
        return -half, half


@dataclass(frozen=True)
class Discrete:
    points: tuple
    weights: tuple

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        ws = tuple(float(w) for w in self.weights)
        if not pts or len(pts) != len(ws):
            raise ValueError("discrete distribution needs matching, nonempty points and weights")
        if any(w < 0 for w in ws) or not math.fsum(ws) > 0:
            raise ValueError("weights must be nonnegative with a positive sum")
        total = math.fsum(ws)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", tuple(w / total for w in ws))

    @property
    def mean(self) -> float:
        return math.fsum(p * w for p, w in zip(self.points, self.weights))

    @property
    def support(self) -> Interval:
        return Interval(min(self.points), max(self.points))

    def central_moment(self, i: int) -> float:
        mu = self.mean
        return math.fsum(w * (p - mu) ** i for p, w in zip(self.points, self.weights))

    def one_sided_moments(self, k: int) -> tuple[float, float]:
        mu = self.mean
        vals = [(w, (p - mu) ** k) for p, w in zip(self.points, self.weights)]
        return math.fsum(w * min(0.0, v) for w, v in vals), math.fsum(w * max(0.0, v) for w, v in vals)


def parse_distribution(text: str):
    """``uniform:a,b`` or ``discrete:x1:w1,x2:w2,...``."""
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    try:
        if name == "uniform":
            a, b = (float(v) for v in rest.split(","))
            return Uniform(a, b)
        if name == "discrete":
            pts, ws = [], []
            for item in rest.split(","):
                p, _, w = item.partition(":")
                pts.append(float(p))
                ws.append(float(w) if w else 1.0)
            return Discrete(tuple(pts), tuple(ws))
    except ValueError as exc:
        raise ValueError(f"bad distribution {text!r}: {exc}") from None
    raise ValueError(f"unknown distribution {text!r}; expected uniform:a,b or discrete:x:w,...")


@dataclass(frozen=True)
class JensenBounds:
    mean: float
    expectation: Interval
    gap: Interval
    enclosure: TaylorEnclosure1D


def jensen_trace(g, dist, degrees, rounding: Rounding | str = Rounding.FAST):
    """``[(degree, JensenBounds), ...]`` for each requested degree."""
    if isinstance(g, str):
        g = parse(g)
    if isinstance(dist, str):
        dist = parse_distribution(dist)
    return [(int(k), jensen_bounds(g, dist, k, rounding)) for k in degrees]


def jensen_bounds(g, dist, k: int = 2, rounding: Rounding | str = Rounding.FAST) -> JensenBounds:
    """Bounds on ``E[f(X)]`` and on the gap ``E[f(X)] - f(E[X])``."""
    if isinstance(g, str):
        g = parse(g)
    if isinstance(dist, str):
        dist = parse_distribution(dist)
    rounding = Rounding.parse(rounding)
    if int(k) != k or k < 2:
        raise ValueError(f"the Jensen gap needs degree >= 2, got {k!r}")
    k = int(k)
    mu = dist.mean
    enc = autobound_1d(g, mu, dist.support, k, rounding)
    gap = ZERO
    # the first central moment is zero up to rounding; keep it when it is not
    for i in range(1, k):
        m = dist.central_moment(i)
        if m != 0.0:
            gap = iv_add(gap, iv_mul(enc.coeffs[i], widen(m, m, rounding), rounding), rounding)
    neg, pos = dist.one_sided_moments(k)
    I = enc.coeffs[k]
    gap = iv_add(gap, iv_mul(I, widen(neg, neg, rounding), rounding), rounding)
    gap = iv_add(gap, iv_mul(I, widen(pos, pos, rounding), rounding), rounding)
    expectation = iv_add(enc.coeffs[0], gap, rounding)
    return JensenBounds(mu, expectation, gap, enc)
