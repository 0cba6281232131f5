"""Fields over (t, x) with exact first derivatives.

Every field wraps a plain evaluator ``fn(t, x)``.  Derivatives that are not
supplied in closed form are obtained by forward-mode dual numbers, so the
evaluator must be written with numpy functions and ordinary arithmetic (no
``float()`` casts, no in-place writes into float arrays).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import dual
from .errors import (
    AsymmetricMetricError,
    DimensionError,
    EvaluationError,
    NotPositiveDefiniteError,
)

ASYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class Event:
    """A point (t, x) of the product R x M in the global chart."""

    t: float
    x: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1:
            raise DimensionError(f"event coordinates must be a vector, got shape {x.shape}")
        if not (np.isfinite(self.t) and np.all(np.isfinite(x))):
            raise EvaluationError("non-finite event", self.t, x)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)

    @property
    def dim(self):
        return self.x.shape[0]


@dataclass(frozen=True)
class TangentVector:
    base: Event
    v: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if v.shape != self.base.x.shape:
            raise DimensionError(f"vector of shape {v.shape} at a point of dimension {self.base.dim}")
        object.__setattr__(self, "v", v)


def as_event(e, x=None):
    if isinstance(e, Event):
        return e
    return Event(e, x)


def _checked(value, t, x, what="field"):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise EvaluationError(f"non-finite {what} value", t, np.asarray(dual.real_array(x)))
    return arr


def _seed_t(t):
    tag = dual.new_tag()
    return dual.seed(t, tag), tag


def _time_derivative(fn, t, x):
    td, tag = _seed_t(t)
    return dual.derivative_array(fn(td, x), tag)


def _floats(x):
    return np.atleast_1d(np.asarray(x, dtype=float))


class ScalarField:
    """Time-dependent function f(t, x) with gradient and time derivative."""

    def __init__(self, fn, grad_x=None, dt=None):
        self.fn = fn
        self._grad_x = grad_x
        self._dt = dt

    def __call__(self, t, x):
        return float(_checked(self.fn(t, _floats(x)), t, x, "scalar"))

    def grad_x(self, t, x):
        x = _floats(x)
        if self._grad_x is not None:
            return _checked(self._grad_x(t, x), t, x, "gradient")
        return _checked(dual.jacobian(lambda xx: self.fn(t, xx), x), t, x, "gradient")

    def dt(self, t, x):
        x = _floats(x)
        if self._dt is not None:
            return float(_checked(self._dt(t, x), t, x, "time derivative"))
        return float(_checked(_time_derivative(self.fn, t, x), t, x, "time derivative"))

    @classmethod
    def constant(cls, c):
        return cls(lambda t, x: c + 0.0 * t, grad_x=lambda t, x: np.zeros(len(x)), dt=lambda t, x: 0.0)


def dual_lift(f):
    """Wrap a scalar evaluator ``f(t, x)``; derivatives by dual numbers."""
    return ScalarField(f)


class TimeDepVectorField:
    """Time-dependent vector field X(t, x) on an n-dimensional chart."""

    def __init__(self, fn, dim, jac_x=None, dt=None):
        self.fn = fn
        self.dim = int(dim)
        self._jac_x = jac_x
        self._dt = dt

    def __call__(self, t, x):
        x = _floats(x)
        out = _checked(self.fn(t, x), t, x, "vector field")
        out = np.broadcast_to(out, (self.dim,)).astype(float)
        return out

    def jac_x(self, t, x):
        """Matrix with entries dX^i/dx^j."""
        x = _floats(x)
        if self._jac_x is not None:
            return _checked(self._jac_x(t, x), t, x, "jacobian").reshape(self.dim, self.dim)
        jac = dual.jacobian(lambda xx: _vec(self.fn(t, xx), self.dim), x)
        return _checked(jac, t, x, "jacobian")

    def dt(self, t, x):
        x = _floats(x)
        if self._dt is not None:
            return _checked(self._dt(t, x), t, x, "time derivative").reshape(self.dim)
        out = _time_derivative(lambda tt, xx: _vec(self.fn(tt, xx), self.dim), t, x)
        return _checked(out, t, x, "time derivative")

    @classmethod
    def constant(cls, v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        n = v.shape[0]
        return cls(
            lambda t, x: v + 0.0 * t,
            n,
            jac_x=lambda t, x: np.zeros((n, n)),
            dt=lambda t, x: np.zeros(n),
        )

    @classmethod
    def zero(cls, n):
        return cls.constant(np.zeros(n))


def _vec(value, n):
    arr = np.asarray(value, dtype=object) if _has_dual(value) else np.asarray(value, dtype=float)
    if arr.shape != (n,):
        arr = np.broadcast_to(arr, (n,))
    return arr


def _has_dual(value):
    if isinstance(value, dual.Dual):
        return True
    arr = np.asarray(value, dtype=object)
    return any(isinstance(v, dual.Dual) for v in arr.flat)


def as_vector_field(X, dim=None):
    """Accept a field or a constant vector."""
    if isinstance(X, TimeDepVectorField):
        if dim is not None and X.dim != dim:
            raise DimensionError(f"vector field of dimension {X.dim}, expected {dim}")
        return X
    v = np.atleast_1d(np.asarray(X, dtype=float))
    if dim is not None and v.shape != (dim,):
        raise DimensionError(f"vector of shape {v.shape}, expected ({dim},)")
    return TimeDepVectorField.constant(v)


def scale(f, X):
    """The product field f*X, with product-rule derivatives."""
    f = f if isinstance(f, ScalarField) else ScalarField.constant(float(f))
    n = X.dim
    return TimeDepVectorField(
        lambda t, x: f.fn(t, x) * _vec(X.fn(t, x), n),
        n,
        jac_x=lambda t, x: np.outer(X(t, x), f.grad_x(t, x)) + f(t, x) * X.jac_x(t, x),
        dt=lambda t, x: f.dt(t, x) * X(t, x) + f(t, x) * X.dt(t, x),
    )


def add(X, Y):
    if X.dim != Y.dim:
        raise DimensionError(f"cannot add fields of dimensions {X.dim} and {Y.dim}")
    return TimeDepVectorField(
        lambda t, x: _vec(X.fn(t, x), X.dim) + _vec(Y.fn(t, x), Y.dim),
        X.dim,
        jac_x=lambda t, x: X.jac_x(t, x) + Y.jac_x(t, x),
        dt=lambda t, x: X.dt(t, x) + Y.dt(t, x),
    )


class EndomorphismField:
    """Time-dependent (1,1)-tensor field, evaluated as an n x n matrix."""

    def __init__(self, fn, dim):
        self.fn = fn
        self.dim = int(dim)

    def __call__(self, t, x):
        x = _floats(x)
        out = _checked(self.fn(t, x), t, x, "endomorphism")
        return np.broadcast_to(out, (self.dim, self.dim)).astype(float)

    @classmethod
    def constant(cls, M):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return cls(lambda t, x: M, M.shape[0])

    @classmethod
    def zero(cls, n):
        return cls.constant(np.zeros((n, n)))


# --------------------------------------------------------------------------
# metrics


class MetricField:
    """Time-dependent Riemannian metric g_ij(t, x).

    ``g_eval`` must accept dual inputs; it is the route by which every other
    quantity (kinetic energy along a path, induced objects) can be
    differentiated exactly.  Closed-form derivatives may be supplied; missing
    ones are computed by dual lifting of ``g_eval``.

    ``dg_dx`` returns the stack ``D[k, i, j] = d g_ij / d x^k``.
    ``d2g_dtdx`` returns ``d/dt`` of that stack.
    """

    def __init__(self, g_eval, dim, dg_dx=None, dg_dt=None, d2g_dtdx=None, provenance="closed_form"):
        self.g_eval = g_eval
        self.dim = int(dim)
        self._dg_dx = dg_dx
        self._dg_dt = dg_dt
        self._d2g_dtdx = d2g_dtdx
        self.provenance = provenance
        self.asymmetry_residual = 0.0

    def _matrix(self, value):
        if _has_dual(value):
            return np.asarray(value, dtype=object).reshape(self.dim, self.dim)
        return np.asarray(value, dtype=float).reshape(self.dim, self.dim)

    def raw(self, t, x):
        """Unsymmetrized evaluator output (may hold duals)."""
        return self._matrix(self.g_eval(t, x))

    def symmetric(self, t, x):
        """(g + g^T)/2, dual-compatible."""
        G = self.raw(t, x)
        return 0.5 * (G + G.T)

    def g(self, t, x):
        x = _floats(x)
        G = _checked(self.g_eval(t, x), t, x, "metric").reshape(self.dim, self.dim)
        return 0.5 * (G + G.T)

    def dg_dx(self, t, x):
        x = _floats(x)
        if self._dg_dx is not None:
            D = _checked(self._dg_dx(t, x), t, x, "metric derivative").reshape(self.dim, self.dim, self.dim)
        else:
            cols = dual.jacobian(lambda xx: self.symmetric(t, xx), x)  # [i, j, k]
            D = _checked(np.moveaxis(cols, -1, 0), t, x, "metric derivative")
        return 0.5 * (D + np.swapaxes(D, 1, 2))

    def dg_dt(self, t, x):
        x = _floats(x)
        if self._dg_dt is not None:
            D = _checked(self._dg_dt(t, x), t, x, "metric time derivative").reshape(self.dim, self.dim)
        else:
            D = _checked(_time_derivative(self.symmetric, t, x), t, x, "metric time derivative")
        return 0.5 * (D + D.T)

    @property
    def has_mixed_derivative(self):
        return self._d2g_dtdx is not None or self.provenance == "autodiff_from_eval"

    def d2g_dtdx(self, t, x):
        x = _floats(x)
        if self._d2g_dtdx is not None:
            D = _checked(self._d2g_dtdx(t, x), t, x, "mixed metric derivative")
            D = D.reshape(self.dim, self.dim, self.dim)
        else:
            td, tag = _seed_t(t)
            cols = dual.jacobian(lambda xx: self.symmetric(td, xx), x)
            D = _checked(np.moveaxis(dual.derivative_array(cols, tag), -1, 0), t, x, "mixed metric derivative")
        return 0.5 * (D + np.swapaxes(D, 1, 2))

    def inverse(self, t, x):
        return _cholesky_inverse(self.g(t, x), t, x)

    def solve(self, t, x, rhs):
        """G^{-1} rhs via Cholesky."""
        G = self.g(t, x)
        return cho_solve(_factor(G, t, x), rhs)

    def inner(self, t, x, u, w):
        return float(np.asarray(u) @ self.g(t, x) @ np.asarray(w))

    def norm(self, t, x, u):
        return float(np.sqrt(max(self.inner(t, x, u, u), 0.0)))


def _factor(G, t, x):
    try:
        return cho_factor(G, lower=True, check_finite=True)
    except (LinAlgError, ValueError):
        raise NotPositiveDefiniteError(t, x) from None


def _cholesky_inverse(G, t, x):
    n = G.shape[0]
    Ginv = cho_solve(_factor(G, t, x), np.eye(n))
    return 0.5 * (Ginv + Ginv.T)


def _probe_points(dim, count=8, seed=0):
    rng = np.random.default_rng(seed)
    ts = rng.uniform(0.5, 1.5, size=count)
    xs = rng.uniform(-1.0, 1.0, size=(count, dim))
    return list(zip(ts, xs))


def metric_from_eval(g_eval, dim, probe_points=None):
    """MetricField whose derivatives come from dual lifting of ``g_eval``.

    The evaluator is sampled at ``probe_points`` (a few pseudo-random events by
    default) to reject asymmetric matrices early; points where it cannot be
    evaluated are skipped.
    """
    m = MetricField(g_eval, dim, provenance="autodiff_from_eval")
    points = _probe_points(dim) if probe_points is None else probe_points
    worst = 0.0
    for t, x in points:
        try:
            G = np.asarray(g_eval(t, _floats(x)), dtype=float)
        except (ArithmeticError, ValueError):
            continue
        if G.shape != (dim, dim):
            raise DimensionError(f"metric evaluator returned shape {G.shape}, expected {(dim, dim)}")
        if not np.all(np.isfinite(G)):
            continue
        worst = max(worst, float(np.max(np.abs(G - G.T))))
    if worst > ASYMMETRY_TOL:
        raise AsymmetricMetricError(f"metric evaluator is asymmetric (residual {worst:.3e})")
    m.asymmetry_residual = worst
    return m


def metric_inverse(m, e, x=None):
    """G^{-1} at an event, via Cholesky; raises if not positive definite."""
    e = as_event(e, x)
    return m.inverse(e.t, e.x)


def musical_endomorphism(m, e, x=None):
    """The matrix G^{-1} * dG/dt at an event."""
    e = as_event(e, x)
    return m.solve(e.t, e.x, m.dg_dt(e.t, e.x))
