"""Connection data: Christoffel symbols, their time derivative, the
time-dependent covariant derivation operator (Gamma, C, A, B) and connections
on the product R x M.

Index convention: ``gamma[k, i, j]`` is the symbol with upper index k and
lower indices i, j, so that (nabla_X Y)^k = X^i d_i Y^k + gamma[k, i, j] X^i Y^j.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dual
from .errors import DimensionError
from .fields import (
    EndomorphismField,
    MetricField,
    ScalarField,
    TimeDepVectorField,
    as_event,
    as_vector_field,
    metric_from_eval,
)


class ChristoffelEval:
    """Evaluator of the symbols Gamma^k_ij(t, x).

    ``dt`` optionally supplies the exact time derivative; otherwise
    :func:`gamma_dot` falls back on central differences in t.
    """

    def __init__(self, fn, dim, dt=None, source="user"):
        self.fn = fn
        self.dim = int(dim)
        self._dt = dt
        self.source = source

    def __call__(self, t, x):
        return np.asarray(self.fn(t, np.asarray(x, dtype=float)), dtype=float).reshape((self.dim,) * 3)

    @property
    def has_exact_dt(self):
        return self._dt is not None

    @classmethod
    def zero(cls, n):
        z = np.zeros((n, n, n))
        return cls(lambda t, x: z, n, dt=lambda t, x: z, source="zero")


def christoffel_from_derivatives(Ginv, D):
    """Levi-Civita symbols from G^{-1} and the stack D[k, i, j] = d_k g_ij."""
    # S[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    S = np.transpose(D, (2, 0, 1)) + np.transpose(D, (1, 2, 0)) - D
    return 0.5 * np.einsum("kl,lij->kij", Ginv, S)


def _lc_symbols(m, t, x):
    return christoffel_from_derivatives(m.inverse(t, x), m.dg_dx(t, x))


def _lc_symbols_dt(m, t, x):
    Ginv = m.inverse(t, x)
    D = m.dg_dx(t, x)
    Ddot = m.d2g_dtdx(t, x)
    Gdot = m.dg_dt(t, x)
    S = np.transpose(D, (2, 0, 1)) + np.transpose(D, (1, 2, 0)) - D
    Sdot = np.transpose(Ddot, (2, 0, 1)) + np.transpose(Ddot, (1, 2, 0)) - Ddot
    dGinv = -Ginv @ Gdot @ Ginv
    return 0.5 * (np.einsum("kl,lij->kij", dGinv, S) + np.einsum("kl,lij->kij", Ginv, Sdot))


def levi_civita(m: MetricField) -> ChristoffelEval:
    """Christoffel symbols of the Levi-Civita connection of each g_t."""
    dt = (lambda t, x: _lc_symbols_dt(m, t, x)) if m.has_mixed_derivative else None
    return ChristoffelEval(lambda t, x: _lc_symbols(m, t, x), m.dim, dt=dt, source="levi_civita")


def gamma_dot(gamma: ChristoffelEval):
    """Evaluator of dGamma/dt, a (2,1)-tensor field.

    Exact when the symbols carry a time derivative (dual-lifted metrics and
    closed-form models); otherwise central differences with
    ``h = 1e-5 * max(1, |t|)``.
    """
    if gamma.has_exact_dt:
        def exact(t, x):
            return np.asarray(gamma._dt(t, np.asarray(x, dtype=float)), dtype=float).reshape((gamma.dim,) * 3)
        return exact

    def central(t, x):
        h = 1e-5 * max(1.0, abs(t))
        return (gamma(t + h, x) - gamma(t - h, x)) / (2.0 * h)

    return central


# --------------------------------------------------------------------------
# chart changes


def pullback_metric(m: MetricField, psi) -> MetricField:
    """The metric in the chart y with x = psi(y): h = Dpsi^T g(t, psi(y)) Dpsi.

    ``psi`` must accept dual inputs (use numpy functions).
    """
    def h_eval(t, y):
        J = dual.jacobian(lambda yy: np.asarray(psi(yy)), y)
        return J.T @ m.symmetric(t, np.asarray(psi(y))) @ J

    return metric_from_eval(h_eval, m.dim)


def chart_jacobians(psi, y):
    """(Dpsi, second derivatives H[a, i, j]) of x = psi(y) at a float point y."""
    y = np.asarray(y, dtype=float)
    J = np.asarray(dual.jacobian(lambda yy: np.asarray(psi(yy)), y), dtype=float)
    H = np.asarray(dual.jacobian(lambda yy: dual.jacobian(lambda zz: np.asarray(psi(zz)), yy), y), dtype=float)
    return J, H


def tensor_transform_21(T, J):
    """Components in the y chart of a (2,1)-tensor given in the x chart."""
    return np.einsum("ka,abc,bi,cj->kij", np.linalg.inv(J), T, J, J)


def christoffel_transform(G, J, H):
    """Symbols in the y chart: the tensor law plus Dpsi^{-1} d^2 psi."""
    return tensor_transform_21(G, J) + np.einsum("ka,aij->kij", np.linalg.inv(J), H)


@dataclass(frozen=True)
class DotNabla:
    """Time-dependent covariant derivation operator (Gamma, C, A, B)."""

    gamma: ChristoffelEval
    C: TimeDepVectorField
    A: EndomorphismField
    B: EndomorphismField

    def __post_init__(self):
        dims = {self.gamma.dim, self.C.dim, self.A.dim, self.B.dim}
        if len(dims) != 1:
            raise DimensionError(f"DotNabla components disagree on dimension: {sorted(dims)}")

    @property
    def dim(self):
        return self.gamma.dim

    @classmethod
    def from_parts(cls, dim, gamma=None, C=None, A=None, B=None):
        """Build from arrays/callables; omitted parts are zero."""
        def _endo(M):
            if M is None:
                return EndomorphismField.zero(dim)
            if isinstance(M, EndomorphismField):
                return M
            if callable(M):
                return EndomorphismField(M, dim)
            return EndomorphismField.constant(M)

        if gamma is None:
            gamma = ChristoffelEval.zero(dim)
        elif not isinstance(gamma, ChristoffelEval):
            if callable(gamma):
                gamma = ChristoffelEval(gamma, dim)
            else:
                arr = np.asarray(gamma, dtype=float)
                gamma = ChristoffelEval(lambda t, x: arr, dim, dt=lambda t, x: np.zeros_like(arr))
        if C is None:
            C = TimeDepVectorField.zero(dim)
        elif not isinstance(C, TimeDepVectorField):
            C = TimeDepVectorField(C, dim) if callable(C) else as_vector_field(C, dim)
        return cls(gamma, C, _endo(A), _endo(B))

    def acceleration(self, t, x, v):
        """-(Gamma(v, v) + C + (A + B) v): the geodesic right-hand side."""
        G = self.gamma(t, x)
        return -(np.einsum("kij,i,j->k", G, v, v) + self.C(t, x) + (self.A(t, x) + self.B(t, x)) @ v)

    def transport_rate(self, t, x, v, w):
        """dw/dt for a vector parallel along a path with velocity v."""
        G = self.gamma(t, x)
        return -(np.einsum("kij,i,j->k", G, v, w) + self.C(t, x) + self.A(t, x) @ v + self.B(t, x) @ w)


def metric_dotnabla(m: MetricField) -> DotNabla:
    """The operator of a time-dependent metric: C = 0, A = B = G^{-1} Gdot / 2."""
    n = m.dim
    half = EndomorphismField(lambda t, x: 0.5 * m.solve(t, x, m.dg_dt(t, x)), n)
    return DotNabla(levi_civita(m), TimeDepVectorField.zero(n), half, half)


def _one_form(a, n):
    if a is None:
        return lambda t, x: np.zeros(n)
    if callable(a):
        return a
    arr = np.asarray(a, dtype=float)
    return lambda t, x: arr


def _two_form(eps, n):
    if eps is None:
        return lambda t, x: np.zeros((n, n))
    if callable(eps):
        return eps
    arr = np.asarray(eps, dtype=float)
    return lambda t, x: arr


class ExtendedConnection:
    """A connection on R x M in the (lambda, alpha, beta, eps, C, A, B, nabla) form.

    ``lam`` is a ScalarField or a number, ``alpha`` and ``beta`` return row
    vectors, ``eps`` returns an n x n matrix.
    """

    def __init__(self, core: DotNabla, lam=None, alpha=None, beta=None, eps=None):
        n = core.dim
        self.core = core
        if lam is None:
            lam = 0.0
        self.lam = lam if isinstance(lam, ScalarField) else ScalarField.constant(float(lam))
        self.alpha = _one_form(alpha, n)
        self.beta = _one_form(beta, n)
        self.eps = _two_form(eps, n)

    @property
    def dim(self):
        return self.core.dim

    def christoffel_hat(self, t, x):
        """Full symbols on R x M, index 0 is time; [rho, mu, nu]."""
        n = self.dim
        x = np.asarray(x, dtype=float)
        H = np.zeros((n + 1, n + 1, n + 1))
        H[0, 0, 0] = self.lam(t, x)
        H[0, 1:, 0] = self.alpha(t, x)
        H[0, 0, 1:] = self.beta(t, x)
        H[0, 1:, 1:] = self.eps(t, x)
        H[1:, 0, 0] = self.core.C(t, x)
        H[1:, 1:, 0] = self.core.A(t, x)
        H[1:, 0, 1:] = self.core.B(t, x)
        H[1:, 1:, 1:] = self.core.gamma(t, x)
        return H


def suspension_connection(m: MetricField) -> ExtendedConnection:
    """Levi-Civita connection of dt^2 + g_t on R x M."""
    return ExtendedConnection(metric_dotnabla(m), eps=lambda t, x: -0.5 * m.dg_dt(t, x))


def _split_hat(F):
    if isinstance(F, tuple):
        f0, X = F
    else:
        raise TypeError("expected a (scalar field, vector field) pair")
    if not isinstance(f0, ScalarField):
        f0 = ScalarField.constant(float(f0))
    return f0, X


def _nabla(gamma, X, Y, t, x):
    Xv = X(t, x)
    return Y.jac_x(t, x) @ Xv + np.einsum("kij,i,j->k", gamma(t, x), Xv, Y(t, x))


def extended_cov_deriv(ec: ExtendedConnection, Xhat, Yhat, e, x=None):
    """Covariant derivative of (f0 d/dt + X) along (g0 d/dt + Y) split into
    its d/dt coefficient and its M part."""
    e = as_event(e, x)
    t, x = e.t, e.x
    f0, X = _split_hat(Xhat)
    g0, Y = _split_hat(Yhat)
    X = as_vector_field(X, ec.dim)
    Y = as_vector_field(Y, ec.dim)
    if e.dim != ec.dim:
        raise DimensionError(f"event of dimension {e.dim} for a connection of dimension {ec.dim}")
    a, b = f0(t, x), g0(t, x)
    Xv, Yv = X(t, x), Y(t, x)
    core = ec.core
    horizontal = (
        a * g0.dt(t, x)
        + g0.grad_x(t, x) @ Xv
        + ec.lam(t, x) * a * b
        + (ec.alpha(t, x) @ Xv) * b
        + (ec.beta(t, x) @ Yv) * a
        + Xv @ ec.eps(t, x) @ Yv
    )
    vertical = (
        a * Y.dt(t, x)
        + _nabla(core.gamma, X, Y, t, x)
        + core.C(t, x) * a * b
        + core.A(t, x) @ Xv * b
        + core.B(t, x) @ Yv * a
    )
    return float(horizontal), vertical


def extended_cov_deriv_coordinates(ec: ExtendedConnection, Xhat, Yhat, e, x=None):
    """Same quantity computed directly from the (n+1)-dimensional symbols."""
    e = as_event(e, x)
    t, x = e.t, e.x
    f0, X = _split_hat(Xhat)
    g0, Y = _split_hat(Yhat)
    X = as_vector_field(X, ec.dim)
    Y = as_vector_field(Y, ec.dim)
    Xh = np.concatenate([[f0(t, x)], X(t, x)])
    Yh = np.concatenate([[g0(t, x)], Y(t, x)])
    # rows: components of Yhat, columns: d/dt, d/dx^j
    J = np.zeros((ec.dim + 1, ec.dim + 1))
    J[0, 0] = g0.dt(t, x)
    J[0, 1:] = g0.grad_x(t, x)
    J[1:, 0] = Y.dt(t, x)
    J[1:, 1:] = Y.jac_x(t, x)
    out = J @ Xh + np.einsum("rmn,m,n->r", ec.christoffel_hat(t, x), Xh, Yh)
    return float(out[0]), out[1:]


def dotnabla_apply(dn: DotNabla, X, Y, e, x=None):
    """Ydot + nabla_X Y + C + A(X) + B(Y) at an event."""
    e = as_event(e, x)
    if e.dim != dn.dim:
        raise DimensionError(f"event of dimension {e.dim} for an operator of dimension {dn.dim}")
    X = as_vector_field(X, dn.dim)
    Y = as_vector_field(Y, dn.dim)
    t, x = e.t, e.x
    return Y.dt(t, x) + _nabla(dn.gamma, X, Y, t, x) + dn.C(t, x) + dn.A(t, x) @ X(t, x) + dn.B(t, x) @ Y(t, x)


def dotnabla_scalar(X, f, e, x=None):
    """Covariant derivative of a time-dependent function: df/dt + X(f)."""
    e = as_event(e, x)
    X = as_vector_field(X, e.dim)
    return f.dt(e.t, e.x) + f.grad_x(e.t, e.x) @ X(e.t, e.x)
