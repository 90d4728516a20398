"""Trace formulas for functions of commuting operator tuples, checked numerically."""

__version__ = "0.1.0"

from .calculus import AnalyticFunction, OperatorTuple, eval_function, partial_derivative, sup_norm_estimate
from .dilation import schaffer_dilation, verify_dilation, von_neumann_check
from .perturbation import PathSpec, first_derivative, second_derivative
from .quadrature import QuadratureSpec
from .spectral import (
    first_order_measures,
    joint_diagonalize,
    second_order_measures,
    verify_first_order,
    verify_second_order,
)

__all__ = [
    "AnalyticFunction",
    "OperatorTuple",
    "PathSpec",
    "QuadratureSpec",
    "__version__",
    "eval_function",
    "first_derivative",
    "first_order_measures",
    "joint_diagonalize",
    "partial_derivative",
    "schaffer_dilation",
    "second_derivative",
    "second_order_measures",
    "sup_norm_estimate",
    "verify_dilation",
    "verify_first_order",
    "verify_second_order",
    "von_neumann_check",
]
