"""Applications built on polynomial enclosures."""

from .bnb import BnBResult, branch_and_bound, quad_bound_extrema
from .integrate import integrate_enclosure, integration_trace
from .jensen import Discrete, JensenBounds, Uniform, jensen_bounds, jensen_trace, parse_distribution
from .mm import MMStep, MMTrace, mm_minimize

__all__ = [
    "BnBResult", "branch_and_bound", "quad_bound_extrema",
    "integrate_enclosure", "integration_trace",
    "Discrete", "JensenBounds", "Uniform", "jensen_bounds", "jensen_trace", "parse_distribution",
    "MMStep", "MMTrace", "mm_minimize",
]
