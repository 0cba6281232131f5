"""Built-in models with closed-form twins.

* ``euclidean``: identity metric on R^n.
* ``conformal_plane``: g = exp(2t) Id on R^2.
* ``circle_scaling``: circle embedded in the plane as j_t(theta) = t (cos theta, sin theta).
* ``circle_rotation``: circle embedded by a clockwise rotation of angle omega*t
  (omega = 2 pi by default, so the path theta(t) = 2 pi t embeds to a point).
* ``double_pendulum``: planar double pendulum with time-varying masses.
  Angles are measured from the upward vertical, so with gravity the
  potential is V = g0 (l1 (m1 + m2) cos phi1 + l2 m2 cos phi2) and phi = 0 is
  the unstable equilibrium.

The circle chart is the universal cover: theta lives on R.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dual
from .errors import InputError, NotAnImmersionError
from .fields import MetricField, ScalarField, metric_from_eval

IMMERSION_RTOL = 1e-12


# --------------------------------------------------------------------------
# embeddings


class EmbeddingFamily:
    """One-parameter family of maps j_t: R^n -> R^m (Euclidean ambient)."""

    def __init__(self, j, dim, ambient_dim, dj_dp=None, dj_dt=None):
        self.j = j
        self.dim = int(dim)
        self.ambient_dim = int(ambient_dim)
        self._dj_dp = dj_dp
        self._dj_dt = dj_dt

    def __call__(self, t, p):
        return np.asarray(self.j(t, np.atleast_1d(np.asarray(p, dtype=float))), dtype=float)

    def jacobian_any(self, t, p):
        """dj/dp as an m x n array; accepts dual inputs."""
        if self._dj_dp is not None:
            return _as_array(self._dj_dp(t, p)).reshape(self.ambient_dim, self.dim)
        return dual.jacobian(lambda pp: _as_array(self.j(t, pp)), p)

    def dj_dp(self, t, p, check=True):
        """dj/dp; with ``check`` a rank-deficient Jacobian raises."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        J = np.asarray(self.jacobian_any(t, p), dtype=float)
        if check:
            _check_immersion(J, t, p)
        return J

    def dj_dt(self, t, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if self._dj_dt is not None:
            return np.asarray(self._dj_dt(t, p), dtype=float)
        tag = dual.new_tag()
        return np.asarray(dual.derivative_array(_as_array(self.j(dual.seed(float(t), tag), p)), tag), dtype=float)


def _as_array(value):
    arr = np.asarray(value, dtype=object)
    if any(isinstance(v, dual.Dual) for v in arr.flat):
        return arr
    return arr.astype(float)


def _check_immersion(J, t, p):
    s = np.linalg.svd(J, compute_uv=False)
    if s.size == 0 or s[-1] <= IMMERSION_RTOL * max(s[0], 1.0):
        raise NotAnImmersionError(t, p)


def induced_metric(fam: EmbeddingFamily) -> MetricField:
    """Pullback of the Euclidean metric: g = J^T J with J = dj/dp."""

    def g_eval(t, p):
        J = fam.jacobian_any(t, p)
        if not any(isinstance(v, dual.Dual) for v in np.asarray(J, dtype=object).flat):
            _check_immersion(np.asarray(J, dtype=float), t, p)
        return J.T @ J

    return metric_from_eval(g_eval, fam.dim)


# --------------------------------------------------------------------------
# simple metrics


def euclidean_metric(n):
    I = np.eye(n)
    Z2 = np.zeros((n, n))
    Z3 = np.zeros((n, n, n))
    return MetricField(
        lambda t, x: I + 0.0 * t,
        n,
        dg_dx=lambda t, x: Z3,
        dg_dt=lambda t, x: Z2,
        d2g_dtdx=lambda t, x: Z3,
    )


def conformal_plane_metric():
    I = np.eye(2)
    Z3 = np.zeros((2, 2, 2))
    return MetricField(
        lambda t, x: np.exp(2 * t) * I,
        2,
        dg_dx=lambda t, x: Z3,
        dg_dt=lambda t, x: 2 * np.exp(2 * t) * I,
        d2g_dtdx=lambda t, x: Z3,
    )


def circle_scaling_family():
    return EmbeddingFamily(
        lambda t, p: np.array([t * np.cos(p[0]), t * np.sin(p[0])]),
        1,
        2,
        dj_dp=lambda t, p: np.array([[-t * np.sin(p[0])], [t * np.cos(p[0])]]),
        dj_dt=lambda t, p: np.array([np.cos(p[0]), np.sin(p[0])]),
    )


def circle_rotation_family(omega=2 * np.pi):
    return EmbeddingFamily(
        lambda t, p: np.array([np.cos(p[0] - omega * t), np.sin(p[0] - omega * t)]),
        1,
        2,
        dj_dp=lambda t, p: np.array([[-np.sin(p[0] - omega * t)], [np.cos(p[0] - omega * t)]]),
        dj_dt=lambda t, p: omega * np.array([np.sin(p[0] - omega * t), -np.cos(p[0] - omega * t)]),
    )


def circle_scaling_metric():
    Z = np.zeros((1, 1, 1))
    return MetricField(
        lambda t, x: np.array([[t * t]]),
        1,
        dg_dx=lambda t, x: Z,
        dg_dt=lambda t, x: np.array([[2 * t]]),
        d2g_dtdx=lambda t, x: Z,
    )


def circle_rotation_metric():
    return euclidean_metric(1)


# --------------------------------------------------------------------------
# double pendulum


class MassSchedule:
    """m(t) = mean + amp * sin(freq * t + phase)."""

    def __init__(self, mean, amp=0.0, freq=1.0, phase=0.0):
        self.mean, self.amp, self.freq, self.phase = float(mean), float(amp), float(freq), float(phase)

    def __call__(self, t):
        return self.mean + self.amp * np.sin(self.freq * t + self.phase)

    def derivative(self, t):
        return self.amp * self.freq * np.cos(self.freq * t + self.phase)

    def as_dict(self):
        return {"mean": self.mean, "amp": self.amp, "freq": self.freq, "phase": self.phase}


@dataclass
class PendulumParams:
    """Lengths, mass schedules (callables of t) and gravity.

    Missing mass derivatives are obtained by dual numbers.  Masses are checked
    for positivity on ``window``.
    """

    l1: float = 1.0
    l2: float = 1.0
    m1: object = field(default_factory=lambda: MassSchedule(2.0, 1.0, 1.0, 0.0))
    m2: object = field(default_factory=lambda: MassSchedule(1.0, 0.5, 1.0, np.pi / 2))
    m1_dot: object = None
    m2_dot: object = None
    g0: float = 9.81
    window: tuple = (0.0, 10.0)

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise InputError("pendulum lengths must be positive")
        if self.g0 < 0:
            raise InputError("gravitational acceleration must be non-negative")
        if self.m1_dot is None:
            self.m1_dot = _derivative_of(self.m1)
        if self.m2_dot is None:
            self.m2_dot = _derivative_of(self.m2)
        ts = np.linspace(self.window[0], self.window[1], 1001)
        for name, m in (("m1", self.m1), ("m2", self.m2)):
            values = np.array([float(m(t)) for t in ts])
            if not np.all(values > 0):
                raise InputError(f"mass {name} is not positive on {self.window}")

    def masses(self, t):
        return self.m1(t), self.m2(t), self.m1_dot(t), self.m2_dot(t)


def _derivative_of(m):
    if isinstance(m, MassSchedule):
        return m.derivative
    return lambda t: dual.diff(m, t)


def pendulum_g(p: PendulumParams):
    l1, l2 = p.l1, p.l2

    def g_eval(t, x):
        m1, m2 = p.m1(t), p.m2(t)
        c = np.cos(x[0] - x[1])
        off = l1 * l2 * m2 * c
        return np.array([[l1 * l1 * (m1 + m2), off], [off, l2 * l2 * m2]])

    return g_eval


def pendulum_metric(p: PendulumParams) -> MetricField:
    """Closed-form metric with hand-differentiated derivatives."""
    l1, l2 = p.l1, p.l2

    def dg_dx(t, x):
        s = np.sin(x[0] - x[1])
        a = -l1 * l2 * p.m2(t) * s
        D = np.zeros((2, 2, 2))
        D[0, 0, 1] = D[0, 1, 0] = a
        D[1, 0, 1] = D[1, 1, 0] = -a
        return D

    def dg_dt(t, x):
        m1d, m2d = p.m1_dot(t), p.m2_dot(t)
        off = l1 * l2 * m2d * np.cos(x[0] - x[1])
        return np.array([[l1 * l1 * (m1d + m2d), off], [off, l2 * l2 * m2d]])

    def d2g_dtdx(t, x):
        s = np.sin(x[0] - x[1])
        a = -l1 * l2 * p.m2_dot(t) * s
        D = np.zeros((2, 2, 2))
        D[0, 0, 1] = D[0, 1, 0] = a
        D[1, 0, 1] = D[1, 1, 0] = -a
        return D

    return MetricField(pendulum_g(p), 2, dg_dx=dg_dx, dg_dt=dg_dt, d2g_dtdx=d2g_dtdx)


def pendulum_potential(p: PendulumParams) -> ScalarField:
    """Gravity with angles measured from the upward vertical."""
    l1, l2, g0 = p.l1, p.l2, p.g0

    def V(t, x):
        m1, m2 = p.m1(t), p.m2(t)
        return g0 * (l1 * (m1 + m2) * np.cos(x[0]) + l2 * m2 * np.cos(x[1]))

    def grad(t, x):
        m1, m2 = p.m1(t), p.m2(t)
        return np.array([-g0 * l1 * (m1 + m2) * np.sin(x[0]), -g0 * l2 * m2 * np.sin(x[1])])

    def dt(t, x):
        return g0 * (l1 * (p.m1_dot(t) + p.m2_dot(t)) * np.cos(x[0]) + l2 * p.m2_dot(t) * np.cos(x[1]))

    return ScalarField(V, grad_x=grad, dt=dt)


class PendulumPrinted:
    """The pendulum formulas exactly as printed, with variants.

    Where a printed formula is suspect, the variant argument selects either
    the printed reading or a candidate correction; nothing is corrected
    silently.  ``den`` is the mass in the denominator ("m1" as printed, or
    "m2"); ``W`` is one of :data:`W_VARIANTS`.
    """

    W_VARIANTS = {
        "printed: m1*m2dot - m1*m2dot": lambda m1, m2, m1d, m2d: m1 * m2d - m1 * m2d,
        "m1*m2dot - m1dot*m2": lambda m1, m2, m1d, m2d: m1 * m2d - m1d * m2,
        "m1dot*m2 - m1*m2dot": lambda m1, m2, m1d, m2d: m1d * m2 - m1 * m2d,
    }

    def __init__(self, p: PendulumParams):
        self.p = p

    def _common(self, t, x):
        d = x[0] - x[1]
        m1, m2, m1d, m2d = self.p.masses(t)
        s, c = np.sin(d), np.cos(d)
        return m1, m2, m1d, m2d, s, c, m1 + m2 * s * s

    def ginv(self, t, x):
        l1, l2 = self.p.l1, self.p.l2
        m1, m2, _, _, s, c, D = self._common(t, x)
        M = np.array([[l2 * l2 * m2, -l1 * l2 * m2 * c], [-l1 * l2 * m2 * c, l1 * l1 * (m1 + m2)]])
        return M / (l1 * l1 * l2 * l2 * m2 * D)

    def gdot(self, t, x, den="m1"):
        l1 = self.p.l1
        m1, m2, m1d, m2d, _, _, _ = self._common(t, x)
        denom = m1 if den == "m1" else m2
        G = pendulum_g(self.p)(t, x)
        E = np.array([[1.0, 0.0], [0.0, 0.0]])
        return m2d / m2 * G + l1 * l1 * (m1d * m2 - m1 * m2d) / denom * E

    def ginv_gdot(self, t, x, den="m1"):
        l1, l2 = self.p.l1, self.p.l2
        m1, m2, m1d, m2d, s, c, D = self._common(t, x)
        denom = m1 if den == "m1" else m2
        M = np.array([[1.0, 0.0], [-l1 / l2 * c, 0.0]])
        return m2d / m2 * np.eye(2) + (m1d * m2 - m1 * m2d) / (denom * D) * M

    def christoffel(self, t, x):
        l1, l2 = self.p.l1, self.p.l2
        m1, m2, _, _, s, c, D = self._common(t, x)
        G = np.zeros((2, 2, 2))
        G[0, 0, 0] = m2 * c * s / D
        G[0, 1, 1] = l2 * m2 * s / (l1 * D)
        G[1, 0, 0] = -l1 * (m1 + m2) * s / (l2 * D)
        G[1, 1, 1] = -m2 * c * s / D
        return G

    def gamma_dot(self, t, x, W="printed: m1*m2dot - m1*m2dot"):
        l1, l2 = self.p.l1, self.p.l2
        m1, m2, m1d, m2d, s, c, D = self._common(t, x)
        w = self.W_VARIANTS[W](m1, m2, m1d, m2d)
        pref = w * s / (l1 * l2 * D * D)
        G = np.zeros((2, 2, 2))
        G[0, 0, 0] = pref * l1 * l2 * c
        G[1, 1, 1] = -pref * l1 * l2 * c
        G[1, 0, 0] = -pref * l1 * l1 * c * c
        G[0, 1, 1] = pref * l2 * l2
        return G

    GEODESIC_VARIANTS = ("m1", "m2", "m2 + cross term")

    def geodesic_acceleration(self, t, x, v, den="m1"):
        """Printed geodesic equations.  ``den="m2 + cross term"`` also adds the
        phi1-velocity term in the second equation that the printed form omits."""
        l1, l2 = self.p.l1, self.p.l2
        m1, m2, m1d, m2d, s, c, D = self._common(t, x)
        denom = m1 if den == "m1" else m2
        K = m1d * m2 - m1 * m2d
        a1 = (-m2 * s / (l1 * D) * (l1 * c * v[0] ** 2 + l2 * v[1] ** 2)
              - (m2d / m2 + K / (denom * D)) * v[0])
        a2 = s / (l2 * D) * (l1 * (m1 + m2) * v[0] ** 2 + l2 * m2 * c * v[1] ** 2) - m2d / m2 * v[1]
        if den == "m2 + cross term":
            a2 = a2 + l1 / l2 * c * K / (m2 * D) * v[0]
        return np.array([a1, a2])


def pendulum_closed_christoffel(p: PendulumParams):
    printed = PendulumPrinted(p)
    return printed.christoffel


def pendulum_closed_gamma_dot(p: PendulumParams):
    printed = PendulumPrinted(p)
    return lambda t, x: printed.gamma_dot(t, x, W="m1*m2dot - m1dot*m2")


# --------------------------------------------------------------------------
# registry


@dataclass
class ModelBundle:
    name: str
    dim: int
    metric: MetricField
    metric_ad: MetricField
    description: str = ""
    embedding: EmbeddingFamily | None = None
    potential: ScalarField | None = None
    params: dict = field(default_factory=dict)
    closed: dict = field(default_factory=dict)
    printed: object = None
    sample_box: tuple = ((0.0, 1.0), (-1.0, 1.0))


MODELS = {
    "euclidean": "identity metric on R^n (parameter n, default 2)",
    "conformal_plane": "g = exp(2t) Id on R^2",
    "circle_scaling": "circle embedded by j_t(theta) = t (cos theta, sin theta); g = t^2 dtheta^2",
    "circle_rotation": "circle embedded by a clockwise rotation of angle omega*t; g = dtheta^2",
    "double_pendulum": "double pendulum with time-varying masses (angles from the upward vertical)",
}


def list_models():
    return dict(MODELS)


def _mass_from(value, default):
    if value is None:
        return default
    if isinstance(value, MassSchedule) or callable(value):
        return value
    if isinstance(value, (int, float)):
        return MassSchedule(float(value))
    if isinstance(value, dict):
        return MassSchedule(**value)
    raise InputError(f"cannot interpret mass schedule {value!r}")


def builtin(name, **params) -> ModelBundle:
    """Fully wired model by name; see :data:`MODELS`."""
    if name not in MODELS:
        raise InputError(f"unknown model {name!r}; available: {', '.join(sorted(MODELS))}")
    if name == "euclidean":
        n = int(params.pop("n", 2))
        _no_extra(name, params)
        m = euclidean_metric(n)
        ad = metric_from_eval(lambda t, x: np.eye(n) + 0.0 * t, n)
        zero3 = np.zeros((n, n, n))
        return ModelBundle(name, n, m, ad, MODELS[name], params={"n": n},
                           closed={"christoffel": lambda t, x: zero3, "gamma_dot": lambda t, x: zero3,
                                   "musical": lambda t, x: np.zeros((n, n))},
                           sample_box=((0.0, 1.0), (-1.0, 1.0)))
    if name == "conformal_plane":
        _no_extra(name, params)
        m = conformal_plane_metric()
        ad = metric_from_eval(lambda t, x: np.exp(2 * t) * np.eye(2), 2)
        zero3 = np.zeros((2, 2, 2))
        return ModelBundle(name, 2, m, ad, MODELS[name],
                           closed={"christoffel": lambda t, x: zero3, "gamma_dot": lambda t, x: zero3,
                                   "musical": lambda t, x: 2.0 * np.eye(2)},
                           sample_box=((-1.0, 1.0), (-2.0, 2.0)))
    if name == "circle_scaling":
        _no_extra(name, params)
        fam = circle_scaling_family()
        zero3 = np.zeros((1, 1, 1))
        return ModelBundle(name, 1, circle_scaling_metric(), induced_metric(fam), MODELS[name], embedding=fam,
                           closed={"christoffel": lambda t, x: zero3, "gamma_dot": lambda t, x: zero3,
                                   "musical": lambda t, x: np.array([[2.0 / t]])},
                           sample_box=((0.5, 2.0), (-np.pi, np.pi)))
    if name == "circle_rotation":
        omega = float(params.pop("omega", 2 * np.pi))
        _no_extra(name, params)
        fam = circle_rotation_family(omega)
        zero3 = np.zeros((1, 1, 1))
        return ModelBundle(name, 1, circle_rotation_metric(), induced_metric(fam), MODELS[name], embedding=fam,
                           params={"omega": omega},
                           closed={"christoffel": lambda t, x: zero3, "gamma_dot": lambda t, x: zero3,
                                   "musical": lambda t, x: np.zeros((1, 1))},
                           sample_box=((0.0, 1.0), (-np.pi, np.pi)))
    # double pendulum
    defaults = PendulumParams.__dataclass_fields__
    p = PendulumParams(
        l1=float(params.pop("l1", 1.0)),
        l2=float(params.pop("l2", 1.0)),
        m1=_mass_from(params.pop("m1", None), defaults["m1"].default_factory()),
        m2=_mass_from(params.pop("m2", None), defaults["m2"].default_factory()),
        g0=float(params.pop("g0", 9.81)),
        window=tuple(params.pop("window", (0.0, 10.0))),
    )
    _no_extra(name, params)
    printed = PendulumPrinted(p)
    info = {"l1": p.l1, "l2": p.l2, "g0": p.g0,
            "m1": p.m1.as_dict() if isinstance(p.m1, MassSchedule) else "callable",
            "m2": p.m2.as_dict() if isinstance(p.m2, MassSchedule) else "callable"}
    return ModelBundle(
        name, 2, pendulum_metric(p), metric_from_eval(pendulum_g(p), 2), MODELS[name],
        potential=pendulum_potential(p) if p.g0 > 0 else None,
        params=info,
        closed={"christoffel": printed.christoffel,
                "gamma_dot": lambda t, x: printed.gamma_dot(t, x, W="m1*m2dot - m1dot*m2"),
                "musical": lambda t, x: printed.ginv_gdot(t, x, den="m2"),
                "ginv": printed.ginv},
        printed=printed,
        sample_box=(tuple(p.window), (-np.pi, np.pi)),
    )


def _no_extra(name, params):
    if params:
        raise InputError(f"unknown parameters for {name}: {', '.join(sorted(params))}")
