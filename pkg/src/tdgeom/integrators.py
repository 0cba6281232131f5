"""Explicit Runge-Kutta integration and sampled trajectories.

Two schemes:

* ``rk4_fixed``: classical RK4 with a uniform step, adjusted so the interval
  is covered by a whole number of steps.  The step pattern depends only on the
  interval, which keeps limit probes smooth in their parameter.
* ``dopri45_adaptive``: Dormand-Prince 5(4) with a standard plain step-size
  controller.

Both integrate backwards when ``t1 < t0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, BudgetExhaustedError, DimensionError, InputError

METHODS = ("rk4_fixed", "dopri45_adaptive")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "dopri45_adaptive"
    step: float = 1e-2
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"unknown integrator {self.method!r}; choose from {METHODS}")
        if not self.step > 0:
            raise InputError("step must be positive")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InputError("tolerances must be positive")
        if self.max_steps < 1:
            raise InputError("max_steps must be at least 1")

    @property
    def tolerance(self):
        """A single number describing the requested accuracy."""
        if self.method == "rk4_fixed":
            return self.step ** 4
        return max(self.abs_tol, self.rel_tol)

    @classmethod
    def rk4(cls, step, max_steps=1_000_000):
        return cls(method="rk4_fixed", step=step, max_steps=max_steps)

    @classmethod
    def adaptive(cls, tol=1e-10, max_steps=1_000_000):
        return cls(method="dopri45_adaptive", abs_tol=tol, rel_tol=tol, max_steps=max_steps)


def integrate(rhs, t0, y0, t1, cfg: IntegratorConfig):
    """Integrate y' = rhs(t, y) from t0 to t1.

    Returns ``(ts, ys, dys)`` with the right-hand side at every sample.
    """
    y0 = np.asarray(y0, dtype=float)
    f0 = _eval(rhs, t0, y0)
    if t1 == t0:
        return np.array([float(t0)]), y0[None, :].copy(), f0[None, :]
    if cfg.method == "rk4_fixed":
        return _rk4(rhs, float(t0), y0, f0, float(t1), cfg)
    return _dopri(rhs, float(t0), y0, f0, float(t1), cfg)


def _eval(rhs, t, y):
    f = np.asarray(rhs(t, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise BlowUpError(t)
    return f


def _rk4(rhs, t0, y0, f0, t1, cfg):
    n_steps = max(1, int(math.ceil(abs(t1 - t0) / cfg.step - 1e-9)))
    if n_steps > cfg.max_steps:
        raise BudgetExhaustedError(t0, cfg.max_steps)
    h = (t1 - t0) / n_steps
    ts = t0 + h * np.arange(n_steps + 1)
    ts[-1] = t1
    ys = np.empty((n_steps + 1, y0.size))
    fs = np.empty_like(ys)
    ys[0], fs[0] = y0, f0
    y, f = y0, f0
    for i in range(n_steps):
        t = ts[i]
        k2 = _eval(rhs, t + 0.5 * h, y + 0.5 * h * f)
        k3 = _eval(rhs, t + 0.5 * h, y + 0.5 * h * k2)
        k4 = _eval(rhs, t + h, y + h * k3)
        y = y + (h / 6.0) * (f + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise BlowUpError(ts[i + 1])
        f = _eval(rhs, ts[i + 1], y)
        ys[i + 1], fs[i + 1] = y, f
    return ts, ys, fs


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _initial_step(rhs, t0, y0, f0, direction, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = _eval(rhs, t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def _dopri(rhs, t0, y0, f0, t1, cfg):
    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    h = min(_initial_step(rhs, t0, y0, f0, direction, cfg), span)
    ts, ys, fs = [t0], [y0], [f0]
    t, y, f = t0, y0, f0
    steps = 0
    K = np.empty((7, y0.size))
    while direction * (t1 - t) > 0:
        if steps >= cfg.max_steps:
            raise BudgetExhaustedError(t, cfg.max_steps)
        steps += 1
        remaining = abs(t1 - t)
        last = h >= remaining * (1 - 1e-12)
        if last:
            h = remaining
        hs = direction * h
        K[0] = f
        for s in range(1, 7):
            ys_ = y + hs * (np.asarray(_A[s]) @ K[:s])
            K[s] = _eval(rhs, t + _C[s] * hs, ys_)
        y_new = y + hs * (_B5 @ K)
        err_vec = hs * (_E @ K)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
            h *= 0.2
            if h < 1e-14 * max(1.0, abs(t)):
                raise BlowUpError(t)
            continue
        if err <= 1.0:
            t = t1 if last else t + hs
            y = y_new
            f = K[6].copy()  # FSAL: last stage is rhs at the new point
            ts.append(t)
            ys.append(y)
            fs.append(f)
            factor = 5.0 if err == 0 else min(5.0, 0.9 * err ** (-1 / 5))
            h = h * factor
        else:
            h = h * max(0.2, 0.9 * err ** (-1 / 5))
            if h < 1e-14 * max(1.0, abs(t)):
                raise BlowUpError(t)
    return np.array(ts), np.array(ys), np.array(fs)


# --------------------------------------------------------------------------
# sampled paths


def _hermite_basis(t, t0, t1):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    value = (2 * s3 - 3 * s2 + 1, (s3 - 2 * s2 + s) * h, -2 * s3 + 3 * s2, (s3 - s2) * h)
    deriv = ((6 * s2 - 6 * s) / h, 3 * s2 - 4 * s + 1, (-6 * s2 + 6 * s) / h, 3 * s2 - 2 * s)
    return value, deriv


def hermite(t, t0, t1, y0, y1, d0, d1):
    """Cubic Hermite value and derivative on [t0, t1]."""
    (a, b, c, d), (da, db, dc, dd) = _hermite_basis(t, t0, t1)
    return a * y0 + b * d0 + c * y1 + d * d1, da * y0 + db * d0 + dc * y1 + dd * d1


@dataclass(frozen=True)
class Trajectory:
    """Samples (t_i, x_i, v_i) of a path, optionally with accelerations a_i.

    Between samples x is the cubic Hermite interpolant of (x, v); v is the
    Hermite interpolant of (v, a) when accelerations are known, otherwise the
    derivative of the position interpolant.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.t, dtype=float))
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        v = np.atleast_2d(np.asarray(self.v, dtype=float))
        if x.shape[0] != t.shape[0]:
            x = x.reshape(t.shape[0], -1)
        if v.shape[0] != t.shape[0]:
            v = v.reshape(t.shape[0], -1)
        if x.shape != v.shape:
            raise DimensionError(f"positions {x.shape} and velocities {v.shape} disagree")
        if t.size > 1:
            dt = np.diff(t)
            if not (np.all(dt > 0) or np.all(dt < 0)):
                raise InputError("trajectory times must be strictly monotone")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        if self.a is not None:
            a = np.atleast_2d(np.asarray(self.a, dtype=float)).reshape(x.shape)
            object.__setattr__(self, "a", a)

    @property
    def dim(self):
        return self.x.shape[1]

    def __len__(self):
        return self.t.shape[0]

    @property
    def t0(self):
        return float(self.t[0])

    @property
    def t1(self):
        return float(self.t[-1])

    @property
    def endpoint(self):
        return self.x[-1].copy()

    @property
    def end_velocity(self):
        return self.v[-1].copy()

    def _locate(self, t):
        ts = self.t
        lo, hi = (ts[0], ts[-1]) if ts[-1] >= ts[0] else (ts[-1], ts[0])
        if not (lo - 1e-12 * max(1.0, abs(lo)) <= t <= hi + 1e-12 * max(1.0, abs(hi))):
            raise InputError(f"t={t!r} outside trajectory range [{lo}, {hi}]")
        if ts[-1] >= ts[0]:
            i = int(np.searchsorted(ts, t, side="right")) - 1
        else:
            i = int(np.searchsorted(-ts, -t, side="right")) - 1
        return min(max(i, 0), len(ts) - 2)

    def __call__(self, t):
        """Interpolated (x, v) at time t."""
        if len(self) == 1:
            return self.x[0].copy(), self.v[0].copy()
        i = self._locate(t)
        (a, b, c, d), (da, db, dc, dd) = _hermite_basis(t, self.t[i], self.t[i + 1])
        x0, x1, v0, v1 = self.x[i], self.x[i + 1], self.v[i], self.v[i + 1]
        x = a * x0 + b * v0 + c * x1 + d * v1
        if self.a is not None:
            v = a * v0 + b * self.a[i] + c * v1 + d * self.a[i + 1]
        else:
            v = da * x0 + db * v0 + dc * x1 + dd * v1
        return x, v

    def acceleration(self, t):
        if self.a is None:
            raise InputError("trajectory carries no accelerations")
        if len(self) == 1:
            return self.a[0].copy()
        i = self._locate(t)
        _, dv = hermite(t, self.t[i], self.t[i + 1], self.v[i], self.v[i + 1], self.a[i], self.a[i + 1])
        return dv

    @classmethod
    def from_path(cls, path, velocity, ts, acceleration=None):
        """Sample a prescribed path; callables map t to arrays."""
        ts = np.asarray(ts, dtype=float)
        x = np.array([np.atleast_1d(path(t)) for t in ts], dtype=float)
        v = np.array([np.atleast_1d(velocity(t)) for t in ts], dtype=float)
        a = None
        if acceleration is not None:
            a = np.array([np.atleast_1d(acceleration(t)) for t in ts], dtype=float)
        return cls(ts, x, v, a)

    def to_rows(self):
        return np.hstack([self.t[:, None], self.x, self.v])
