"""Limit probes: the four-flow commutator and the four-step torsion loop.

Both build a path c(eps) with c(0) = p and c'(0) = 0 and estimate c''(0)/2
from the quotients (c(eps) - p)/eps**2 by Richardson extrapolation.  All
integration inside a probe is fixed-step RK4 with step eps/64.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connection import DotNabla
from .dynamics import flow_point, geodesic_with_transport
from .errors import EvaluationError, InputError, IntegrationError, ProbeError
from .fields import as_event, as_vector_field
from .integrators import IntegratorConfig
from .operators import td_bracket, torsion_operator

DEFAULT_EPS = (0.1, 0.05, 0.025)
DEFAULT_TOL = 1e-4
SUBSTEPS = 64
MIN_ORDER = 1.8


@dataclass
class ProbeResult:
    epsilons: list
    endpoints: list
    base_point: np.ndarray
    quotients: list
    extrapolated_second_derivative: np.ndarray
    convergence_order_estimate: float
    richardson_table: list = field(default_factory=list)
    tolerance: float = DEFAULT_TOL
    consistent: bool = True
    expected: np.ndarray | None = None
    checks: dict = field(default_factory=dict)

    @property
    def error(self):
        if self.expected is None:
            return None
        return float(np.max(np.abs(self.extrapolated_second_derivative - self.expected)))

    def as_dict(self):
        out = {
            "epsilons": [float(e) for e in self.epsilons],
            "endpoints": [np.asarray(p).tolist() for p in self.endpoints],
            "base_point": np.asarray(self.base_point).tolist(),
            "extrapolated_second_derivative": np.asarray(self.extrapolated_second_derivative).tolist(),
            "convergence_order_estimate": _json_float(self.convergence_order_estimate),
            "tolerance": self.tolerance,
            "consistent": bool(self.consistent),
            "checks": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else _json_float(v)) for k, v in self.checks.items()},
        }
        if self.expected is not None:
            out["expected"] = np.asarray(self.expected).tolist()
            out["error"] = self.error
        return out


def _json_float(v):
    v = float(v)
    return v if np.isfinite(v) else None


def _check_eps(eps_list):
    eps = [float(e) for e in eps_list]
    if len(eps) < 2:
        raise InputError("need at least two epsilon levels")
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise InputError("epsilons must be positive and strictly decreasing")
    ratios = [a / b for a, b in zip(eps, eps[1:])]
    if max(ratios) - min(ratios) > 1e-9 * max(ratios):
        raise InputError("epsilons must form a geometric sequence")
    return eps, ratios[0]


def richardson(values, ratio=2.0):
    """Extrapolation tableau for values with error c1*eps + c2*eps**2 + ...

    ``values`` are ordered by decreasing eps, consecutive eps differing by
    ``ratio``.  Returns the rows of the tableau; the last entry of the last row
    is the best estimate.
    """
    values = [np.asarray(v, dtype=float) for v in values]
    table = [[values[0]]]
    for i in range(1, len(values)):
        row = [values[i]]
        for j in range(1, i + 1):
            factor = ratio ** j - 1.0
            row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / factor)
        table.append(row)
    return table


def defect_order(epsilons, defects, floor=1e-13):
    """Least-squares slope of log|defect| against log eps (inf if negligible)."""
    eps = np.asarray(epsilons, dtype=float)
    d = np.asarray(defects, dtype=float)
    if np.all(d <= floor):
        return float("inf")
    keep = d > floor
    if keep.sum() < 2:
        return float("inf")
    slope, _ = np.polyfit(np.log(eps[keep]), np.log(d[keep]), 1)
    return float(slope)


def _assemble(eps, ratio, p, endpoints, tol, expected=None):
    quotients = [(c - p) / e ** 2 for e, c in zip(eps, endpoints)]
    table = richardson(quotients, ratio)
    best = table[-1][-1]
    last = table[-1]
    consistent = bool(len(last) < 2 or np.max(np.abs(last[-1] - last[-2])) < tol)
    defects = [float(np.linalg.norm(c - p)) for c in endpoints]
    order = defect_order(eps, defects)
    return ProbeResult(
        epsilons=eps,
        endpoints=[np.asarray(c) for c in endpoints],
        base_point=np.asarray(p),
        quotients=quotients,
        extrapolated_second_derivative=best,
        convergence_order_estimate=order,
        richardson_table=[[np.asarray(v).tolist() for v in row] for row in table],
        tolerance=tol,
        consistent=consistent,
        expected=expected,
        checks={"defect_order": order, "tangent_vanishes": bool(order >= MIN_ORDER)},
    )


def _probe_config(eps, cfg):
    max_steps = cfg.max_steps if cfg is not None else 1_000_000
    return IntegratorConfig.rk4(eps / SUBSTEPS, max_steps=max_steps)


def commutator_path(X, Y, t, p, eps, cfg):
    """c4(eps) from the four alternating flows of X and Y."""
    c1 = flow_point(X, t, p, t + eps, cfg)
    c2 = flow_point(Y, t + eps, c1, t + 2 * eps, cfg)
    c3 = flow_point(X, t + 2 * eps, c2, t + eps, cfg)
    return flow_point(Y, t + eps, c3, t, cfg)


def bracket_probe(X, Y, e, eps_list=DEFAULT_EPS, cfg: IntegratorConfig | None = None, tol=DEFAULT_TOL, x=None):
    """Estimate half the second derivative of the flow commutator at eps = 0."""
    e = as_event(e, x)
    X = as_vector_field(X, e.dim)
    Y = as_vector_field(Y, e.dim)
    eps, ratio = _check_eps(eps_list)
    p = e.x
    endpoints = []
    for h in eps:
        try:
            endpoints.append(commutator_path(X, Y, e.t, p, h, _probe_config(h, cfg)))
        except (IntegrationError, EvaluationError) as exc:
            raise ProbeError(f"flow failed: {exc}", h) from exc
    c0 = commutator_path(X, Y, e.t, p, 0.0, IntegratorConfig.rk4(1.0))
    result = _assemble(eps, ratio, p, endpoints, tol, expected=td_bracket(X, Y, e))
    result.checks["c0_equals_p"] = bool(np.array_equal(c0, p))
    return result


def torsion_loop_path(dn: DotNabla, t, p0, v0, w0, eps, cfg):
    """p4 after the four geodesic legs with parallel transport."""
    p1, _, (v1, w1) = geodesic_with_transport(dn, t, p0, v0, [v0, w0], t + eps, cfg)
    p2, _, (v2, w2) = geodesic_with_transport(dn, t + eps, p1, w1, [v1, w1], t + 2 * eps, cfg)
    p3, _, (w3,) = geodesic_with_transport(dn, t + 2 * eps, p2, v2, [w2], t + eps, cfg)
    p4, _, _ = geodesic_with_transport(dn, t + eps, p3, w3, [], t, cfg)
    return p4


def torsion_loop_probe(dn: DotNabla, e, v0, w0, eps_list=DEFAULT_EPS, cfg: IntegratorConfig | None = None,
                       tol=DEFAULT_TOL, x=None):
    """Estimate half the second derivative of the torsion loop endpoint.

    The expected limit is minus the torsion operator at (v0, w0).
    """
    e = as_event(e, x)
    v0 = np.asarray(v0, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    eps, ratio = _check_eps(eps_list)
    endpoints = []
    for h in eps:
        try:
            endpoints.append(torsion_loop_path(dn, e.t, e.x, v0, w0, h, _probe_config(h, cfg)))
        except (IntegrationError, EvaluationError) as exc:
            raise ProbeError(f"geodesic failed: {exc}", h) from exc
    expected = -torsion_operator(dn, v0, w0, e)
    c0 = torsion_loop_path(dn, e.t, e.x, v0, w0, 0.0, IntegratorConfig.rk4(1.0))
    result = _assemble(eps, ratio, e.x, endpoints, tol, expected=expected)
    result.checks["c0_equals_p"] = bool(np.array_equal(c0, e.x))
    return result
