"""Automatically derived Taylor polynomial enclosures with sharp remainder bounds."""

from .enclosure1d import IntervalPolynomial, TaylorEnclosure1D, autobound_1d
from .enclosurend import TaylorEnclosureND, TensorIntervalPolynomial, autobound_nd
from .exprgraph import DomainError, ExprGraph, GraphBuilder, ParseError, evaluate, parse
from .interval import Interval, Rounding
from .tensorcore import BilinearOp, ResourceLimitError, TensorInterval

__all__ = [
    "BilinearOp", "DomainError", "ExprGraph", "GraphBuilder", "Interval", "IntervalPolynomial",
    "ParseError", "ResourceLimitError", "Rounding", "TaylorEnclosure1D", "TaylorEnclosureND",
    "TensorInterval", "TensorIntervalPolynomial", "autobound_1d", "autobound_nd", "evaluate", "parse",
]
