"""Flows, geodesics, parallel transport and the energy/length functionals."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dual
from .connection import DotNabla, christoffel_from_derivatives, suspension_connection
from .errors import DimensionError, InputError, NotPositiveDefiniteError, StationaryPathError
from .fields import MetricField, ScalarField, TimeDepVectorField
from .integrators import IntegratorConfig, Trajectory, hermite, integrate
from .quadrature import piecewise_simpson

DEFAULT_CONFIG = IntegratorConfig()
STATIONARY_T = 1e-14


def _vec(v, n=None, name="vector"):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1 or (n is not None and v.shape[0] != n):
        raise DimensionError(f"{name} has shape {v.shape}, expected ({n},)")
    return v


def _second_order(ts, ys, fs, n, **meta):
    return Trajectory(ts, ys[:, :n], ys[:, n:], fs[:, n:], meta=meta)


# --------------------------------------------------------------------------
# flows


def flow(X: TimeDepVectorField, t0, p, t1, cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Integral curve of X through (t0, p), sampled up to t1."""
    p = _vec(p, X.dim, "initial point")
    ts, xs, fs = integrate(lambda t, x: X(t, x), t0, p, t1, cfg)
    acc = np.array([X.dt(t, x) + X.jac_x(t, x) @ f for t, x, f in zip(ts, xs, fs)])
    return Trajectory(ts, xs, fs, acc, meta={"kind": "flow"})


def flow_point(X, t0, p, t1, cfg=DEFAULT_CONFIG):
    """Endpoint of the flow only."""
    p = _vec(p, X.dim, "initial point")
    _, xs, _ = integrate(lambda t, x: X(t, x), t0, p, t1, cfg)
    return xs[-1]


def flow_tangent(X: TimeDepVectorField, t0, p, t1, w0, cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Push w0 through the tangent map of the flow from t0 to t1."""
    n = X.dim
    p = _vec(p, n, "initial point")
    w0 = _vec(w0, n, "tangent vector")

    def rhs(t, y):
        x, w = y[:n], y[n:]
        return np.concatenate([X(t, x), X.jac_x(t, x) @ w])

    _, ys, _ = integrate(rhs, t0, np.concatenate([p, w0]), t1, cfg)
    return ys[-1, n:]


# --------------------------------------------------------------------------
# geodesics


def metric_geodesic_acceleration(m: MetricField, t, x, v):
    """-(Gamma(v, v) + G^{-1} Gdot v) for a time-dependent metric."""
    Ginv = m.inverse(t, x)
    Gam = christoffel_from_derivatives(Ginv, m.dg_dx(t, x))
    return -(np.einsum("kij,i,j->k", Gam, v, v) + Ginv @ (m.dg_dt(t, x) @ v))


def geodesic_metric(m: MetricField, t0, x0, v0, t1, cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Critical path of the time-dependent energy functional."""
    n = m.dim
    x0, v0 = _vec(x0, n, "x0"), _vec(v0, n, "v0")

    def rhs(t, y):
        return np.concatenate([y[n:], metric_geodesic_acceleration(m, t, y[:n], y[n:])])

    ts, ys, fs = integrate(rhs, t0, np.concatenate([x0, v0]), t1, cfg)
    return _second_order(ts, ys, fs, n, kind="geodesic_metric")


def geodesic_dotnabla(dn: DotNabla, t0, x0, v0, t1, cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Path whose velocity is parallel for the operator (Gamma, C, A, B)."""
    n = dn.dim
    x0, v0 = _vec(x0, n, "x0"), _vec(v0, n, "v0")

    def rhs(t, y):
        return np.concatenate([y[n:], dn.acceleration(t, y[:n], y[n:])])

    ts, ys, fs = integrate(rhs, t0, np.concatenate([x0, v0]), t1, cfg)
    return _second_order(ts, ys, fs, n, kind="geodesic_dotnabla")


def geodesic_suspension(m: MetricField, t0, x0, v0, s1, cfg: IntegratorConfig = DEFAULT_CONFIG,
                        time_velocity=1.0) -> Trajectory:
    """Geodesic of dt^2 + g_t on R x M, parametrized by s starting at s = t0.

    The state is (gamma^0, gamma); the initial velocity is (time_velocity, v0).
    Section-form data means gamma^0(s) = s.
    """
    n = m.dim
    x0, v0 = _vec(x0, n, "x0"), _vec(v0, n, "v0")
    ec = suspension_connection(m)

    def rhs(s, y):
        pos, vel = y[: n + 1], y[n + 1:]
        H = ec.christoffel_hat(pos[0], pos[1:])
        return np.concatenate([vel, -np.einsum("rmn,m,n->r", H, vel, vel)])

    y0 = np.concatenate([[float(t0)], x0, [float(time_velocity)], v0])
    ts, ys, fs = integrate(rhs, t0, y0, s1, cfg)
    return _second_order(ts, ys, fs, n + 1, kind="geodesic_suspension")


FORCE_CONVENTIONS = ("lagrangian", "printed")


def forced_geodesic(m: MetricField, V: ScalarField, t0, x0, v0, t1, cfg: IntegratorConfig = DEFAULT_CONFIG,
                    convention="lagrangian") -> Trajectory:
    """Motion under the potential V: geodesic terms plus the force G^{-1} dV.

    ``"lagrangian"`` subtracts G^{-1} dV (Lagrangian T - V, energy-conserving
    for time-independent data).  ``"printed"`` adds it instead, which is what
    the pendulum equation reads like if its Euler-Lagrange operator of V is
    taken as -dV/dx.
    """
    if convention not in FORCE_CONVENTIONS:
        raise InputError(f"unknown force convention {convention!r}")
    sign = -1.0 if convention == "lagrangian" else 1.0
    n = m.dim
    x0, v0 = _vec(x0, n, "x0"), _vec(v0, n, "v0")

    def rhs(t, y):
        x, v = y[:n], y[n:]
        a = metric_geodesic_acceleration(m, t, x, v) + sign * m.solve(t, x, V.grad_x(t, x))
        return np.concatenate([v, a])

    ts, ys, fs = integrate(rhs, t0, np.concatenate([x0, v0]), t1, cfg)
    return _second_order(ts, ys, fs, n, kind="forced_geodesic", convention=convention)


# --------------------------------------------------------------------------
# parallel transport


@dataclass(frozen=True)
class SampledVectorField:
    """A vector field along a path, sampled with its rate of change."""

    t: np.ndarray
    w: np.ndarray
    rate: np.ndarray

    def __call__(self, t):
        if len(self.t) == 1:
            return self.w[0].copy()
        ts = self.t
        if ts[-1] >= ts[0]:
            i = int(np.searchsorted(ts, t, side="right")) - 1
        else:
            i = int(np.searchsorted(-ts, -t, side="right")) - 1
        i = min(max(i, 0), len(ts) - 2)
        w, _ = hermite(t, ts[i], ts[i + 1], self.w[i], self.w[i + 1], self.rate[i], self.rate[i + 1])
        return w

    @property
    def final(self):
        return self.w[-1].copy()


def parallel_transport(dn: DotNabla, base: Trajectory, w0, cfg: IntegratorConfig = DEFAULT_CONFIG,
                       t1=None) -> SampledVectorField:
    """Solve nabla_t w + C + A(gamma') + B(w) = 0 along a sampled base path."""
    n = dn.dim
    if base.dim != n:
        raise DimensionError(f"base path of dimension {base.dim} for an operator of dimension {n}")
    w0 = _vec(w0, n, "w0")
    t_end = base.t1 if t1 is None else t1

    def rhs(t, w):
        x, v = base(t)
        return dn.transport_rate(t, x, v, w)

    ts, ws, rates = integrate(rhs, base.t0, w0, t_end, cfg)
    return SampledVectorField(ts, ws, rates)


def geodesic_with_transport(dn: DotNabla, t0, x0, v0, vectors, t1, cfg: IntegratorConfig):
    """Integrate a geodesic and transport ``vectors`` along it in one system.

    Returns ``(x1, v1, [w1, ...])`` at t1.
    """
    n = dn.dim
    x0, v0 = _vec(x0, n, "x0"), _vec(v0, n, "v0")
    ws = [_vec(w, n, "transported vector") for w in vectors]
    k = len(ws)

    def rhs(t, y):
        x, v = y[:n], y[n:2 * n]
        G = dn.gamma(t, x)
        C = dn.C(t, x)
        A = dn.A(t, x)
        B = dn.B(t, x)
        Av = A @ v
        out = [v, -(np.einsum("kij,i,j->k", G, v, v) + C + Av + B @ v)]
        for j in range(k):
            w = y[(2 + j) * n:(3 + j) * n]
            out.append(-(np.einsum("kij,i,j->k", G, v, w) + C + Av + B @ w))
        return np.concatenate(out)

    _, ys, _ = integrate(rhs, t0, np.concatenate([x0, v0, *ws]), t1, cfg)
    y = ys[-1]
    return y[:n], y[n:2 * n], [y[(2 + j) * n:(3 + j) * n] for j in range(k)]


# --------------------------------------------------------------------------
# functionals


@dataclass
class FunctionalReport:
    energy: float
    length: float
    kinetic_series: list = field(default_factory=list)
    el_residual_max: float = 0.0
    el_residual_skipped: int = 0  # samples where g is degenerate

    def as_dict(self):
        return {
            "energy": self.energy,
            "length": self.length,
            "el_residual_max": self.el_residual_max,
            "el_residual_skipped": self.el_residual_skipped,
            "kinetic_series": [[float(t), float(T)] for t, T in self.kinetic_series],
        }


def _accelerations(base: Trajectory):
    if base.a is not None:
        return base.a
    if len(base) < 3:
        return np.zeros_like(base.v)
    return np.gradient(base.v, base.t, axis=0, edge_order=2)


def _knots(base):
    ts = base.t
    return ts if ts[-1] >= ts[0] else ts[::-1]


def kinetic_energy(m: MetricField, t, x, v):
    return 0.5 * m.inner(t, x, v, v)


def functionals(m: MetricField, base: Trajectory, tol=1e-9) -> FunctionalReport:
    """Energy, length, kinetic-energy series and energy-critical residual."""
    if base.dim != m.dim:
        raise DimensionError(f"path of dimension {base.dim} for a metric of dimension {m.dim}")
    series = [(float(t), kinetic_energy(m, t, x, v)) for t, x, v in zip(base.t, base.x, base.v)]
    if len(base) < 2 or base.t0 == base.t1:
        return FunctionalReport(0.0, 0.0, series, 0.0)

    def speed2(t):
        x, v = base(t)
        return m.inner(t, x, v, v)

    knots = _knots(base)
    energy = piecewise_simpson(lambda t: 0.5 * speed2(t), knots, tol)
    length = piecewise_simpson(lambda t: np.sqrt(max(speed2(t), 0.0)), knots, tol)
    acc = _accelerations(base)
    worst, skipped = 0.0, 0
    for t, x, v, a in zip(base.t, base.x, base.v, acc):
        try:
            r = a - metric_geodesic_acceleration(m, t, x, v)
        except NotPositiveDefiniteError:
            skipped += 1  # e.g. t = 0 for the scaling family t p
            continue
        worst = max(worst, m.norm(t, x, r))
    return FunctionalReport(float(energy), float(length), series, float(worst), skipped)


def embedded_length(fam, base: Trajectory, tol=1e-9) -> float:
    """Euclidean length of t -> j_t(gamma(t)) in the ambient space.

    Only the chain rule is used, so isolated instants where j_t fails to be
    an immersion (t = 0 for the scaling family) are harmless.
    """
    if len(base) < 2 or base.t0 == base.t1:
        return 0.0

    def speed(t):
        x, v = base(t)
        return float(np.linalg.norm(fam.dj_dt(t, x) + fam.dj_dp(t, x, check=False) @ v))

    return float(piecewise_simpson(speed, _knots(base), tol))


def covariant_acceleration(m: MetricField, t, x, v, a):
    """nabla_t gamma' = gamma'' + Gamma(gamma', gamma')."""
    Ginv = m.inverse(t, x)
    Gam = christoffel_from_derivatives(Ginv, m.dg_dx(t, x))
    return a + np.einsum("kij,i,j->k", Gam, v, v)


def kinetic_energy_rate(m: MetricField, t, x, v, a):
    """dT/dt along a path from the kinetic-energy identity:
    gdot(v, v)/2 + g(nabla_t gamma', gamma')."""
    nabla_v = covariant_acceleration(m, t, x, v, a)
    return 0.5 * float(v @ m.dg_dt(t, x) @ v) + m.inner(t, x, nabla_v, v)


def kinetic_energy_rate_chain_rule(m: MetricField, t, x, v, a):
    """dT/dt by the chain rule on T = g_ij(t, x) v^i v^j / 2 (no connection)."""
    dG = m.dg_dt(t, x) + np.einsum("kij,k->ij", m.dg_dx(t, x), v)
    return 0.5 * float(v @ dG @ v) + m.inner(t, x, a, v)


def kinetic_energy_rate_exact(m: MetricField, path, t):
    """dT/dt for a prescribed path by dual numbers in t.

    ``path(t)`` must return ``(x, v)`` using dual-compatible arithmetic.
    """
    tag = dual.new_tag()
    td = dual.seed(float(t), tag)
    x, v = path(td)
    x = np.asarray(x, dtype=object)
    v = np.asarray(v, dtype=object)
    G = m.symmetric(td, x)
    T = 0.5 * (v @ G @ v)
    return float(dual.derivative(T, tag))


def length_critical_residual(m: MetricField, base: Trajectory) -> float:
    """Max metric norm of nabla_t gamma' + G^{-1} Gdot gamma' - (dT/dt)/(2T) gamma'."""
    acc = _accelerations(base)
    worst = 0.0
    for t, x, v, a in zip(base.t, base.x, base.v, acc):
        T = kinetic_energy(m, t, x, v)
        if T < STATIONARY_T:
            raise StationaryPathError(float(t))
        nabla_v = covariant_acceleration(m, t, x, v, a)
        dT = 0.5 * float(v @ m.dg_dt(t, x) @ v) + m.inner(t, x, nabla_v, v)
        r = nabla_v + m.solve(t, x, m.dg_dt(t, x) @ v) - dT / (2.0 * T) * v
        worst = max(worst, m.norm(t, x, r))
    return float(worst)
