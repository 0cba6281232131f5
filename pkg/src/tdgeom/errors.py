"""Exception hierarchy.

Input problems (bad shapes, bad scenario files) derive from ``InputError``;
everything that goes wrong while computing derives from ``NumericalError``.
The CLI maps the two families onto exit codes 2 and 3.
"""
from __future__ import annotations


class GeometryError(Exception):
    """Base class for all package errors."""


class InputError(GeometryError):
    pass


class DimensionError(InputError, ValueError):
    pass


class NumericalError(GeometryError):
    pass


def _num(t):
    try:
        return repr(float(t))
    except (TypeError, ValueError):
        return repr(t)


class EvaluationError(NumericalError):
    """A field evaluator produced a non-finite value."""

    def __init__(self, message, t=None, x=None):
        self.t = t
        self.x = None if x is None else tuple(float(c) for c in x)
        if t is not None:
            message = f"{message} at (t={_num(t)}, x={self.x!r})"
        super().__init__(message)


class NotPositiveDefiniteError(EvaluationError):
    def __init__(self, t=None, x=None):
        super().__init__("not positive definite", t, x)


class AsymmetricMetricError(InputError):
    pass


class NotAnImmersionError(EvaluationError):
    def __init__(self, t=None, x=None):
        super().__init__("not an immersion", t, x)


class IntegrationError(NumericalError):
    pass


class BudgetExhaustedError(IntegrationError):
    def __init__(self, t, max_steps):
        self.t = t
        super().__init__(f"integration budget exhausted ({max_steps} steps) at t={_num(t)}")


class BlowUpError(IntegrationError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"blow-up at t={_num(t)}")


class StationaryPathError(NumericalError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"stationary point on path at t={_num(t)}")


class ProbeError(NumericalError):
    def __init__(self, message, eps=None):
        self.eps = eps
        if eps is not None:
            message = f"{message} (eps={_num(eps)})"
        super().__init__(message)


class ScenarioError(InputError):
    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
