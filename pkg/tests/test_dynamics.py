import numpy as np
import pytest

from tdgeom import IntegratorConfig, Trajectory
from tdgeom.connection import DotNabla, metric_dotnabla
from tdgeom.dynamics import (
    embedded_length, flow, flow_point, flow_tangent, forced_geodesic, functionals, geodesic_dotnabla,
    geodesic_metric, geodesic_suspension, kinetic_energy_rate, kinetic_energy_rate_chain_rule,
    kinetic_energy_rate_exact, length_critical_residual, parallel_transport,
)
from tdgeom.errors import DimensionError, InputError, StationaryPathError
from tdgeom.fields import MetricField, ScalarField, TimeDepVectorField
from tdgeom.models import builtin, conformal_plane_metric, euclidean_metric, pendulum_metric, PendulumParams

CFG = IntegratorConfig.adaptive(1e-11)


def test_flow_of_time_field():
    X = TimeDepVectorField(lambda t, x: np.array([t]), 1)
    assert flow_point(X, 0.0, [0.0], 1.0, CFG)[0] == pytest.approx(0.5, abs=1e-10)


def test_zero_field_flow_is_constant():
    traj = flow(TimeDepVectorField.zero(2), 0.0, [1.0, -2.0], 3.0, CFG)
    assert np.all(traj.x == [1.0, -2.0])
    assert np.allclose(flow_tangent(TimeDepVectorField.zero(2), 0.0, [0, 0], 1.0, [3.0, 4.0], CFG), [3.0, 4.0])


def test_flow_tangent_against_finite_differences():
    X = TimeDepVectorField(lambda t, x: np.array([np.sin(x[1]) + t, x[0] * x[1]]), 2)
    p, w = np.array([0.2, 0.5]), np.array([0.3, -0.4])
    h = 1e-6
    fd = (flow_point(X, 0.0, p + h * w, 0.7, CFG) - flow_point(X, 0.0, p - h * w, 0.7, CFG)) / (2 * h)
    assert np.allclose(flow_tangent(X, 0.0, p, 0.7, w, CFG), fd, atol=1e-7)


def test_flow_backward_consistency():
    X = TimeDepVectorField(lambda t, x: np.array([x[1], -np.sin(t * x[0])]), 2)
    q = flow_point(X, 0.0, [0.4, 0.1], 1.5, CFG)
    assert np.allclose(flow_point(X, 1.5, q, 0.0, CFG), [0.4, 0.1], atol=1e-9)


def test_flow_dimension_check():
    with pytest.raises(DimensionError):
        flow(TimeDepVectorField.zero(2), 0.0, [1.0, 2.0, 3.0], 1.0)


def test_euclidean_geodesics_are_lines():
    traj = geodesic_metric(euclidean_metric(3), 0.0, [1, 2, 3], [0.5, -1, 2], 2.0, CFG)
    assert np.allclose(traj.x[-1], [2, 0, 7], atol=1e-12)


def test_conformal_geodesic_closed_form():
    # x'' = -2 x' for g = exp(2t) Id
    x0, v0 = np.array([0.1, -0.3]), np.array([1.0, 2.0])
    traj = geodesic_metric(conformal_plane_metric(), 0.0, x0, v0, 1.5, CFG)
    for t, x, v in zip(traj.t, traj.x, traj.v):
        assert np.allclose(x, x0 + v0 * (1 - np.exp(-2 * t)) / 2, atol=1e-9)
        assert np.allclose(v, v0 * np.exp(-2 * t), atol=1e-9)


def test_metric_operator_geodesic_equals_metric_geodesic():
    m = pendulum_metric(PendulumParams())
    a = geodesic_metric(m, 0.2, [0.3, -0.2], [0.4, 0.1], 1.2, CFG)
    b = geodesic_dotnabla(metric_dotnabla(m), 0.2, [0.3, -0.2], [0.4, 0.1], 1.2, CFG)
    assert np.allclose(a.x[-1], b.x[-1], atol=1e-9) and np.allclose(a.v[-1], b.v[-1], atol=1e-9)


def test_dotnabla_geodesic_damping():
    dn = DotNabla.from_parts(2, A=0.5 * np.eye(2), B=0.5 * np.eye(2))
    v0 = np.array([1.0, -2.0])
    traj = geodesic_dotnabla(dn, 0.5, [0, 0], v0, 2.0, CFG)
    assert np.allclose(traj.v[-1], v0 * np.exp(-1.5), atol=1e-10)


def test_suspension_of_static_metric():
    traj = geodesic_suspension(euclidean_metric(2), 0.0, [0, 1], [1.0, 0.5], 2.0, CFG)
    assert np.allclose(traj.x[:, 0], traj.t, atol=1e-12)
    assert np.allclose(traj.x[-1, 1:], [2.0, 2.0], atol=1e-12)


def test_suspension_time_component_matches_section_form():
    # for the time-dependent conformal metric gamma^0 departs from s
    traj = geodesic_suspension(conformal_plane_metric(), 0.0, [0, 0], [0.5, 0.2], 1.0, CFG)
    assert traj.a[0, 0] == pytest.approx(0.5 * 2 * (0.25 + 0.04), abs=1e-12)


def test_forced_with_constant_potential_is_geodesic():
    m = pendulum_metric(PendulumParams())
    a = forced_geodesic(m, ScalarField.constant(3.0), 0.0, [0.3, 0.1], [0.2, -0.1], 1.0, CFG)
    b = geodesic_metric(m, 0.0, [0.3, 0.1], [0.2, -0.1], 1.0, CFG)
    assert np.allclose(a.x[-1], b.x[-1], atol=1e-12)


def test_force_sign_harmonic_oscillator():
    V = ScalarField(lambda t, x: 0.5 * x[0] ** 2)
    traj = forced_geodesic(euclidean_metric(1), V, 0.0, [1.0], [0.0], 2.0, CFG)
    assert traj.x[-1, 0] == pytest.approx(np.cos(2.0), abs=1e-9)
    flipped = forced_geodesic(euclidean_metric(1), V, 0.0, [1.0], [0.0], 2.0, CFG, convention="printed")
    assert flipped.x[-1, 0] == pytest.approx(np.cosh(2.0), abs=1e-8)
    with pytest.raises(InputError):
        forced_geodesic(euclidean_metric(1), V, 0.0, [1.0], [0.0], 2.0, CFG, convention="other")


def _stationary(x, t1=2.0):
    ts = np.linspace(0.0, t1, 21)
    return Trajectory.from_path(lambda t: np.asarray(x, float), lambda t: np.zeros(len(x)), ts,
                                acceleration=lambda t: np.zeros(len(x)))


def test_transport_along_stationary_conformal_path():
    w = parallel_transport(metric_dotnabla(conformal_plane_metric()), _stationary([0.2, 0.3]), [1.0, 2.0], CFG)
    assert np.allclose(w.final, np.array([1.0, 2.0]) * np.exp(-2.0), atol=1e-10)
    assert np.allclose(w(1.0), np.array([1.0, 2.0]) * np.exp(-1.0), atol=1e-6)


def test_transport_preserves_norm_for_static_metric():
    g = MetricField(lambda t, x: np.array([[1 + x[0] ** 2, 0.2], [0.2, 2 + np.sin(x[1])]]), 2)
    base = geodesic_metric(g, 0.0, [0.1, 0.2], [0.5, 0.3], 2.0, CFG)
    w = parallel_transport(metric_dotnabla(g), base, [0.3, -0.7], CFG)
    n0 = g.norm(0.0, base.x[0], w.w[0])
    for t, wi in zip(w.t, w.w):
        x, _ = base(t)
        assert g.norm(t, x, wi) == pytest.approx(n0, abs=1e-7)


def test_transport_dimension_check():
    with pytest.raises(DimensionError):
        parallel_transport(metric_dotnabla(euclidean_metric(3)), _stationary([0.0, 0.0]), [1, 0, 0])


def test_functionals_cauchy_schwarz_and_critical_residual():
    m = pendulum_metric(PendulumParams())
    base = geodesic_metric(m, 0.0, [0.2, -0.1], [0.6, 0.3], 1.5, IntegratorConfig.adaptive(1e-12))
    rep = functionals(m, base, tol=1e-10)
    assert rep.length ** 2 <= 2 * rep.energy * 1.5 * (1 + 1e-12)
    assert rep.el_residual_max < 100 * 1e-10 * 1e3
    assert len(rep.kinetic_series) == len(base)
    assert set(rep.as_dict()) >= {"energy", "length", "el_residual_max", "kinetic_series"}


def test_functionals_of_straight_line():
    ts = np.linspace(0, 2, 9)
    base = Trajectory.from_path(lambda t: np.array([3 * t, 4 * t]), lambda t: np.array([3.0, 4.0]), ts,
                                acceleration=lambda t: np.zeros(2))
    rep = functionals(euclidean_metric(2), base)
    assert rep.length == pytest.approx(10.0) and rep.energy == pytest.approx(25.0)
    assert rep.el_residual_max == pytest.approx(0.0, abs=1e-14)


def test_functionals_on_empty_interval():
    rep = functionals(euclidean_metric(2), Trajectory([0.0], [[1.0, 1.0]], [[2.0, 0.0]]))
    assert (rep.energy, rep.length) == (0.0, 0.0)
    assert rep.kinetic_series == [(0.0, 2.0)]


def test_embedded_length_of_rotating_circle():
    b = builtin("circle_rotation")
    base = _stationary([0.3], t1=1.0)
    assert embedded_length(b.embedding, base) == pytest.approx(2 * np.pi, abs=1e-9)
    assert functionals(b.metric, base).length == 0.0


def test_kinetic_energy_rate_identity():
    m = pendulum_metric(PendulumParams())

    def path(t):
        return np.array([0.3 * np.sin(t), 0.2 * t * t]), np.array([0.3 * np.cos(t), 0.4 * t])

    t = 0.7
    x, v = (np.asarray(u, float) for u in path(t))
    a = np.array([-0.3 * np.sin(t), 0.4])
    exact = kinetic_energy_rate_exact(m, path, t)
    assert kinetic_energy_rate(m, t, x, v, a) == pytest.approx(exact, abs=1e-11)
    assert kinetic_energy_rate_chain_rule(m, t, x, v, a) == pytest.approx(exact, abs=1e-11)


def test_length_critical_residual_vanishes_for_reparametrized_line():
    ts = np.linspace(0, 1, 11)
    base = Trajectory.from_path(lambda t: np.array([t + t * t, 0.0]), lambda t: np.array([1 + 2 * t, 0.0]), ts,
                                acceleration=lambda t: np.array([2.0, 0.0]))
    assert length_critical_residual(euclidean_metric(2), base) < 1e-12


def test_length_critical_residual_for_static_geodesic():
    g = MetricField(lambda t, x: np.array([[1 + x[0] ** 2, 0.0], [0.0, 1.0]]), 2)
    base = geodesic_metric(g, 0.0, [0.5, 0.0], [1.0, 0.5], 1.0, IntegratorConfig.adaptive(1e-12))
    assert length_critical_residual(g, base) < 1e-6


def test_length_critical_residual_rejects_stationary_path():
    with pytest.raises(StationaryPathError):
        length_critical_residual(euclidean_metric(2), _stationary([0.0, 0.0]))
