"""Input validation helpers shared by the estimators and the functional API."""

import numbers

import numpy as np


class ParameterError(ValueError):
    """Raised for infeasible or out-of-range parameters."""


def check_fraction(value, name, *, upper=1.0):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not (0.0 <= value <= upper) or np.isnan(value):
        raise ParameterError(f"{name} must lie in [0, {upper}], got {value}")
    return value


def check_nonnegative(value, name):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if value < 0 or np.isnan(value) or np.isinf(value):
        raise ParameterError(f"{name} must be a finite nonnegative number, got {value}")
    return value


def check_positive_int(value, name, *, minimum=1):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_probability(value, name):
    if not isinstance(value, numbers.Real) or not (0.0 < float(value) < 1.0):
        raise ParameterError(f"{name} must lie strictly between 0 and 1, got {value!r}")
    return float(value)


def check_graph(graph):
    from .graph import Graph

    if not isinstance(graph, Graph):
        raise TypeError(f"expected a Graph, got {type(graph).__name__}")
    if graph.node_count == 0:
        raise ParameterError("graph has no nodes")
    return graph
