"""Global minimisation of univariate functions by branch and bound.

Each node of the search is a sub-interval of the domain. Processing a node
computes a degree-2 enclosure centred at the node midpoint; the minimum of its
quadratic lower bound is a certified lower bound for ``f`` on the node, and
``f`` is sampled at the midpoint and at the minimiser of that bound to improve
the incumbent. Nodes are processed best-first by the lower bound inherited
from their parent, and bisected until the gap closes.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from ..enclosure1d import TaylorEnclosure1D, autobound_1d
from ..exprgraph import evaluate, parse
from ..interval import Interval, Rounding


def _bound_value(enc: TaylorEnclosure1D, z: float, which: str) -> float:
    c0, c1, I = enc.coeffs
    if which == "lower":
        lin = min(c1.lo * z, c1.hi * z) if z else 0.0
        quad = I.lo * (z * z) if z else 0.0
        return c0.lo + lin + quad
    lin = max(c1.lo * z, c1.hi * z) if z else 0.0
    quad = I.hi * (z * z) if z else 0.0
    return c0.hi + lin + quad


def quad_bound_extrema(enc: TaylorEnclosure1D, which: str = "lower") -> tuple[float, float]:
    """Exact minimum over the trust region of one quadratic bound of ``enc``.

    For ``which="lower"`` the bound is ``c0 + c1 z + lo(I) z^2``, a lower bound
    on ``f``; for ``"upper"`` it is ``c0 + c1 z + hi(I) z^2``. Both are
    minimised: the first certifies a lower bound on ``min f`` and the second
    gives a descent step. Returns ``(x, value)`` with ``x = x0 + z``.

    Candidates are the two ends of the trust region and the vertex
    ``-c1 / (2c)`` when the parabola opens upwards.
    """
    if enc.degree != 2:
        raise ValueError("quad_bound_extrema needs a degree-2 enclosure")
    if which not in ("lower", "upper"):
        raise ValueError(f"which must be 'lower' or 'upper', got {which!r}")
    c1, I = enc.coeffs[1], enc.coeffs[2]
    c = I.lo if which == "lower" else I.hi
    zl, zh = enc.trust.lo - enc.x0, enc.trust.hi - enc.x0
    cands = [(enc.trust.lo, zl), (enc.trust.hi, zh)]
    if not c1.is_point and zl < 0.0 < zh:
        cands.append((enc.x0, 0.0))
    if 0 < c < math.inf:
        for b in {c1.lo, c1.hi}:
            zv = -b / (2.0 * c)
            if zl < zv < zh:
                cands.append((enc.x0 + zv, zv))
    best = None
    for x, z in cands:
        v = _bound_value(enc, z, which)
        if best is None or v < best[1]:
            best = (x, v)
    return best


@dataclass
class BnBResult:
    xbest: float
    fbest: float
    lower_bound: float
    steps: int
    converged: bool
    trace: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.fbest - self.lower_bound

    def __iter__(self):
        return iter((self.xbest, self.fbest, self.lower_bound, self.trace))


def branch_and_bound(g, trust, tol: float = 1e-9, max_steps: int = 1000,
                     rounding: Rounding | str = Rounding.FAST) -> BnBResult:
    """Certified global minimum of ``g`` over ``trust``.

    Returns a :class:`BnBResult`; ``converged`` is False when ``max_steps``
    ran out before ``fbest - lower_bound <= tol``. The trace holds one
    ``(step, lower_bound, fbest)`` row per processed node.
    """
    if isinstance(g, str):
        g = parse(g)
    rounding = Rounding.parse(rounding)
    trust = Interval.coerce(trust)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")

    xbest, fbest = None, math.inf

    def sample(x):
        nonlocal xbest, fbest
        fx = evaluate(g, x)
        if fx < fbest:
            xbest, fbest = x, fx

    # queue entries: (inherited lower bound, tie-breaker, lo, hi)
    queue = [(-math.inf, 0, trust.lo, trust.hi)]
    fathomed = math.inf
    counter = 1
    trace = []
    steps = 0
    lower = -math.inf
    while queue and steps < max_steps:
        if queue[0][0] >= fbest - tol:
            break
        inherited, _, lo, hi = heapq.heappop(queue)
        steps += 1
        mid = 0.5 * (lo + hi)
        sample(mid)
        enc = autobound_1d(g, mid, Interval(lo, hi), 2, rounding)
        xq, bound = quad_bound_extrema(enc, "lower")
        sample(min(max(xq, lo), hi))
        node_lb = max(inherited, bound)
        if node_lb >= fbest - tol or hi - lo <= 0.0 or not (lo < mid < hi):
            fathomed = min(fathomed, node_lb)
        else:
            heapq.heappush(queue, (node_lb, counter, lo, mid))
            heapq.heappush(queue, (node_lb, counter + 1, mid, hi))
            counter += 2
        lower = min(fathomed, queue[0][0]) if queue else fathomed
        lower = min(lower, fbest)
        trace.append((steps, lower, fbest))
    converged = (not queue) or queue[0][0] >= fbest - tol
    if converged:
        lower = min([fathomed] + [q[0] for q in queue] + [fbest])
    return BnBResult(xbest, fbest, lower, steps, converged, trace)
