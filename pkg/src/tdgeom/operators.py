"""Time-dependent Lie calculus and the torsion operator."""
from __future__ import annotations

import numpy as np

from .connection import DotNabla, ExtendedConnection, dotnabla_apply, extended_cov_deriv
from .errors import NumericalError
from .fields import ScalarField, TimeDepVectorField, as_event, as_vector_field

THIRD_CONSTRUCTION_RTOL = 1e-9


def lie_derivative_scalar(X, f: ScalarField, e, x=None):
    """df/dt + X(f)."""
    e = as_event(e, x)
    X = as_vector_field(X, e.dim)
    return float(f.dt(e.t, e.x) + f.grad_x(e.t, e.x) @ X(e.t, e.x))


def lie_bracket(X, Y, e, x=None):
    """Ordinary bracket [X, Y] at frozen time."""
    e = as_event(e, x)
    X = as_vector_field(X, e.dim)
    Y = as_vector_field(Y, e.dim)
    t, x = e.t, e.x
    return Y.jac_x(t, x) @ X(t, x) - X.jac_x(t, x) @ Y(t, x)


def lie_derivative_vector(X, Y, e, x=None):
    """Ydot + [X, Y]."""
    e = as_event(e, x)
    Y = as_vector_field(Y, e.dim)
    return Y.dt(e.t, e.x) + lie_bracket(X, Y, e)


def td_bracket(X, Y, e, x=None):
    """Time-dependent bracket [X, Y] + Ydot - Xdot."""
    e = as_event(e, x)
    X = as_vector_field(X, e.dim)
    Y = as_vector_field(Y, e.dim)
    return lie_bracket(X, Y, e) + Y.dt(e.t, e.x) - X.dt(e.t, e.x)


def suspension_bracket(X, Y, e, x=None):
    """Bracket of d/dt + X and d/dt + Y on R x M, from (n+1)-dimensional
    Jacobians; returns the full (n+1)-vector, time component first."""
    e = as_event(e, x)
    X = as_vector_field(X, e.dim)
    Y = as_vector_field(Y, e.dim)
    t, x = e.t, e.x

    def hat(F):
        J = np.zeros((e.dim + 1, e.dim + 1))
        J[1:, 0] = F.dt(t, x)
        J[1:, 1:] = F.jac_x(t, x)
        return np.concatenate([[1.0], F(t, x)]), J

    Xh, JX = hat(X)
    Yh, JY = hat(Y)
    return JY @ Xh - JX @ Yh


def _pointwise(v, dn, e):
    if isinstance(v, TimeDepVectorField):
        return v(e.t, e.x)
    return np.broadcast_to(np.asarray(v, dtype=float), (dn.dim,))


def torsion_formula(dn: DotNabla, X, Y, e, x=None):
    """T^nabla(X, Y) + (A - B)(X - Y); needs only pointwise values."""
    e = as_event(e, x)
    Xv, Yv = _pointwise(X, dn, e), _pointwise(Y, dn, e)
    G = dn.gamma(e.t, e.x)
    T = np.einsum("kij,i,j->k", G - np.transpose(G, (0, 2, 1)), Xv, Yv)
    return T + (dn.A(e.t, e.x) - dn.B(e.t, e.x)) @ (Xv - Yv)


def torsion_third_construction(dn: DotNabla, X, Y, e, x=None):
    """dotnabla_X Y - dotnabla_Y X - [[X, Y]]."""
    e = as_event(e, x)
    return dotnabla_apply(dn, X, Y, e) - dotnabla_apply(dn, Y, X, e) - td_bracket(X, Y, e)


def torsion_operator(dn: DotNabla, X, Y, e, x=None, check=True):
    """Time-dependent torsion operator.

    With ``check`` the value is recomputed from covariant derivatives and the
    bracket, and a mismatch raises.
    """
    e = as_event(e, x)
    value = torsion_formula(dn, X, Y, e)
    if check:
        other = torsion_third_construction(dn, X, Y, e)
        scale = 1.0 + max(np.max(np.abs(value)), np.max(np.abs(other)))
        if np.max(np.abs(value - other)) > THIRD_CONSTRUCTION_RTOL * scale:
            raise NumericalError(f"torsion constructions disagree: {value} vs {other}")
    return value


def vertical_torsion_check(ec: ExtendedConnection, X, Y, e, x=None):
    """Torsion of the extended connection on the suspensions of X and Y.

    Returns ``(vertical, horizontal)``.
    """
    e = as_event(e, x)
    X = as_vector_field(X, ec.dim)
    Y = as_vector_field(Y, ec.dim)
    one = ScalarField.constant(1.0)
    hXY, vXY = extended_cov_deriv(ec, (one, X), (one, Y), e)
    hYX, vYX = extended_cov_deriv(ec, (one, Y), (one, X), e)
    br = suspension_bracket(X, Y, e)
    return vXY - vYX - br[1:], float(hXY - hYX - br[0])


def horizontal_torsion_formula(ec: ExtendedConnection, X, Y, e, x=None):
    """(alpha - beta)(X - Y) + eps(X, Y) - eps(Y, X)."""
    e = as_event(e, x)
    Xv = as_vector_field(X, ec.dim)(e.t, e.x)
    Yv = as_vector_field(Y, ec.dim)(e.t, e.x)
    E = ec.eps(e.t, e.x)
    return float((ec.alpha(e.t, e.x) - ec.beta(e.t, e.x)) @ (Xv - Yv) + Xv @ E @ Yv - Yv @ E @ Xv)
