"""Scenario files: schema, parsing and execution.

A scenario is one YAML (or JSON) document.  See ``SCHEMA`` for the accepted
keys; README.md has a worked example for every task.  Running a scenario
writes up to three files into the output directory:

* ``<name>.trajectory.csv`` with header ``t,x1..xn,v1..vn`` (path tasks only),
* ``<name>.diagnostics.json`` with residuals, series and probe tables,
* ``<name>.summary.json`` with the headline numbers, keys sorted.

Nothing time- or host-dependent goes into the summary, so identical inputs
give identical summary files.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import dual
from .connection import DotNabla, levi_civita, metric_dotnabla
from .dynamics import (FORCE_CONVENTIONS, embedded_length, flow, forced_geodesic, functionals,
                       geodesic_dotnabla, geodesic_metric, geodesic_suspension, kinetic_energy,
                       length_critical_residual, parallel_transport)
from .errors import GeometryError, InputError, NotPositiveDefiniteError, ScenarioError, StationaryPathError
from .expressions import compile_matrix, compile_scalar, compile_vector
from .fields import Event, ScalarField, TimeDepVectorField
from .integrators import IntegratorConfig, Trajectory
from .models import MODELS, builtin
from .operators import td_bracket, torsion_formula, torsion_third_construction
from .probes import DEFAULT_EPS, DEFAULT_TOL, bracket_probe, torsion_loop_probe
from .validation import validate

SCHEMA_VERSION = 1
TASKS = ("geodesic", "forced", "transport", "flow", "functionals", "torsion_probe", "bracket_probe",
         "validate", "suspension")

_num = {"type": "number"}
_numvec = {"type": "array", "items": _num, "minItems": 1}
_expr = {"type": ["string", "number"]}
_exprvec = {"type": "array", "items": _expr, "minItems": 1}
_exprmat = {"type": "array", "items": _exprvec, "minItems": 1}
_pos = {"type": "number", "exclusiveMinimum": 0}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tdgeom scenario",
    **_obj({
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "model": _obj({"name": {"enum": sorted(MODELS)}, "params": {"type": "object"}}, ["name"]),
        "task": {"enum": list(TASKS)},
        "t0": _num,
        "t1": _num,
        "x0": _numvec,
        "v0": _numvec,
        "w0": _numvec,
        "integrator": _obj({
            "method": {"enum": ["rk4_fixed", "dopri45_adaptive"]},
            "step": _pos,
            "abs_tol": _pos,
            "rel_tol": _pos,
            "max_steps": {"type": "integer", "minimum": 1},
        }),
        "fields": _obj({"X": _exprvec, "Y": _exprvec}),
        "path": _obj({"x": _exprvec, "v": _exprvec, "samples": {"type": "integer", "minimum": 2}}, ["x"]),
        "connection": _obj({
            "kind": {"enum": ["metric", "parts"]},
            "gamma": {"enum": ["levi_civita", "zero"]},
            "C": _exprvec,
            "A": _exprmat,
            "B": _exprmat,
        }),
        "potential": _expr,
        "force_convention": {"enum": list(FORCE_CONVENTIONS)},
        "probe": _obj({"eps": {"type": "array", "items": _pos, "minItems": 2}, "tol": _pos}),
        "quadrature_tol": _pos,
        "validate": _obj({"samples": {"type": "integer", "minimum": 1}, "seed": {"type": "integer"}}),
        "time_velocity": _num,
        "outputs": _obj({"trajectory": {"type": "string"}, "diagnostics": {"type": "string"},
                         "summary": {"type": "string"}}),
    }, ["schema_version", "model", "task"]),
    "allOf": [
        {"if": {"properties": {"task": {"enum": ["geodesic", "forced", "suspension"]}}},
         "then": {"required": ["t1", "x0", "v0"]}},
        {"if": {"properties": {"task": {"const": "transport"}}}, "then": {"required": ["t1", "x0", "v0", "w0"]}},
        {"if": {"properties": {"task": {"const": "flow"}}},
         "then": {"required": ["t1", "x0", "fields"], "properties": {"fields": {"required": ["X"]}}}},
        {"if": {"properties": {"task": {"const": "functionals"}}},
         "then": {"required": ["t1"], "anyOf": [{"required": ["path"]}, {"required": ["x0", "v0"]}]}},
        {"if": {"properties": {"task": {"const": "torsion_probe"}}}, "then": {"required": ["x0", "v0", "w0"]}},
        {"if": {"properties": {"task": {"const": "bracket_probe"}}},
         "then": {"required": ["x0", "fields"], "properties": {"fields": {"required": ["X", "Y"]}}}},
    ],
}

DEFAULT_INTEGRATOR = {"method": "dopri45_adaptive", "step": 1e-2, "abs_tol": 1e-10, "rel_tol": 1e-10,
                      "max_steps": 1_000_000}


@dataclass
class Scenario:
    """A validated scenario with defaults filled in."""

    task: str
    model: str
    params: dict = field(default_factory=dict)
    name: str = "scenario"
    t0: float = 0.0
    t1: float | None = None
    x0: list | None = None
    v0: list | None = None
    w0: list | None = None
    integrator: dict = field(default_factory=lambda: dict(DEFAULT_INTEGRATOR))
    fields: dict = field(default_factory=dict)
    path: dict | None = None
    connection: dict = field(default_factory=lambda: {"kind": "metric"})
    potential: str | float | None = None
    force_convention: str = "lagrangian"
    probe: dict = field(default_factory=lambda: {"eps": list(DEFAULT_EPS), "tol": DEFAULT_TOL})
    quadrature_tol: float = 1e-9
    validate: dict = field(default_factory=lambda: {"samples": 100, "seed": 0})
    time_velocity: float = 1.0
    outputs: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        out = {"schema_version": SCHEMA_VERSION, "model": {"name": d.pop("model"), "params": d.pop("params")}}
        out.update({k: v for k, v in d.items() if v is not None})
        return out

    def dump(self):
        """YAML text that parses back to an equal scenario."""
        return yaml.safe_dump(self.to_dict(), sort_keys=True)


def _field_path(err):
    parts = []
    for p in err.absolute_path:
        if isinstance(p, int):
            parts.append(f"[{p}]")
        else:
            parts.append(("." if parts else "") + str(p))
    return "".join(parts) or "<root>"


def check_schema(data):
    """Raise ScenarioError naming the offending field for the first violation."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if err is None:
        return
    path = _field_path(err)
    if err.validator == "required" and err.validator_value:
        missing = [k for k in err.validator_value if isinstance(err.instance, dict) and k not in err.instance]
        if missing:
            prefix = "" if path == "<root>" else path + "."
            path = prefix + missing[0]
    raise ScenarioError(err.message, path)


def from_dict(data, default_name="scenario") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping", "<root>")
    check_schema(data)
    data = dict(data)
    data.pop("schema_version")
    model = data.pop("model")
    kw = {"model": model["name"], "params": dict(model.get("params", {}))}
    kw["name"] = data.pop("name", default_name)
    integ = dict(DEFAULT_INTEGRATOR)
    integ.update(data.pop("integrator", {}))
    kw["integrator"] = integ
    if "probe" in data:
        probe = {"eps": list(DEFAULT_EPS), "tol": DEFAULT_TOL}
        probe.update(data.pop("probe"))
        kw["probe"] = probe
    if "validate" in data:
        val = {"samples": 100, "seed": 0}
        val.update(data.pop("validate"))
        kw["validate"] = val
    if "connection" in data:
        conn = {"kind": "metric"}
        conn.update(data.pop("connection"))
        kw["connection"] = conn
    for key in ("t0", "t1", "quadrature_tol", "time_velocity"):
        if key in data:
            kw[key] = float(data.pop(key))
    for key in ("x0", "v0", "w0"):
        if key in data:
            kw[key] = [float(v) for v in data.pop(key)]
    kw.update(data)
    return Scenario(**kw)


def loads(text, default_name="scenario") -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse scenario: {exc}", "<root>") from None
    return from_dict(data, default_name)


def load(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}", "<file>") from None
    return loads(text, default_name=path.stem)


# --------------------------------------------------------------------------
# execution


def _config(sc: Scenario):
    c = sc.integrator
    return IntegratorConfig(method=c["method"], step=float(c["step"]), abs_tol=float(c["abs_tol"]),
                            rel_tol=float(c["rel_tol"]), max_steps=int(c["max_steps"]))


def _check_dim(sc, key, n):
    value = getattr(sc, key)
    if value is not None and len(value) != n:
        raise ScenarioError(f"expected {n} components, got {len(value)}", key)


def _vector_field(sc, key, n):
    sources = sc.fields.get(key)
    if len(sources) != n:
        raise ScenarioError(f"expected {n} components, got {len(sources)}", f"fields.{key}")
    try:
        return TimeDepVectorField(compile_vector(sources, n), n)
    except GeometryError as exc:
        raise ScenarioError(str(exc), f"fields.{key}") from None


def _operator(sc, bundle):
    conn = sc.connection
    n = bundle.dim
    if conn.get("kind", "metric") == "metric":
        return metric_dotnabla(bundle.metric)
    try:
        parts = {}
        if conn.get("gamma", "zero") == "levi_civita":
            parts["gamma"] = levi_civita(bundle.metric)
        if "C" in conn:
            if len(conn["C"]) != n:
                raise ScenarioError(f"expected {n} components", "connection.C")
            parts["C"] = TimeDepVectorField(compile_vector(conn["C"], n), n)
        for key in ("A", "B"):
            if key in conn:
                parts[key] = compile_matrix(conn[key], n)
        return DotNabla.from_parts(n, **parts)
    except ScenarioError:
        raise
    except GeometryError as exc:
        raise ScenarioError(str(exc), "connection") from None


def _potential(sc, bundle):
    if sc.potential is not None:
        try:
            return ScalarField(compile_scalar(sc.potential, bundle.dim))
        except GeometryError as exc:
            raise ScenarioError(str(exc), "potential") from None
    if bundle.potential is None:
        raise ScenarioError("model has no potential; give one", "potential")
    return bundle.potential


def _prescribed_path(sc, n):
    pspec = sc.path
    if len(pspec["x"]) != n:
        raise ScenarioError(f"expected {n} components", "path.x")
    try:
        xf = compile_vector(pspec["x"], 0)
        if "v" in pspec:
            if len(pspec["v"]) != n:
                raise ScenarioError(f"expected {n} components", "path.v")
            vf = compile_vector(pspec["v"], 0)
        else:
            def vf(t, x=None):
                tag = dual.new_tag()
                return dual.derivative_array(xf(dual.seed(t, tag), None), tag)
    except GeometryError as exc:
        raise ScenarioError(str(exc), "path") from None

    def acc(t):
        tag = dual.new_tag()
        return dual.derivative_array(vf(dual.seed(t, tag), None), tag)

    ts = np.linspace(sc.t0, sc.t1, int(pspec.get("samples", 101))) if sc.t1 != sc.t0 else np.array([sc.t0])
    return Trajectory.from_path(lambda t: xf(t, None), lambda t: vf(t, None), ts,
                                acceleration=lambda t: np.broadcast_to(acc(t), (n,)))


def _floats(a):
    return np.asarray(a, dtype=float).tolist()


def _run_path(sc, bundle, traj, diag, summary, metric=True):
    summary["samples"] = len(traj)
    summary["endpoint"] = {"t": traj.t1, "x": _floats(traj.endpoint), "v": _floats(traj.end_velocity)}
    if metric:
        rep = functionals(bundle.metric, traj, sc.quadrature_tol)
        diag["functionals"] = rep.as_dict()
        summary["energy"] = rep.energy
        summary["length"] = rep.length
        summary["el_residual_max"] = rep.el_residual_max


def execute(sc: Scenario):
    """Run a scenario; returns (trajectory or None, diagnostics, summary)."""
    try:
        bundle = builtin(sc.model, **sc.params)
    except InputError as exc:
        raise ScenarioError(str(exc), "model.params") from None
    n = bundle.dim
    for key in ("x0", "v0", "w0"):
        _check_dim(sc, key, n)
    cfg = _config(sc)
    diag = {}
    summary = {"name": sc.name, "task": sc.task, "model": bundle.name, "dim": n}
    traj = None
    t1 = sc.t1

    if sc.task == "geodesic":
        if sc.connection.get("kind", "metric") == "metric":
            traj = geodesic_metric(bundle.metric, sc.t0, sc.x0, sc.v0, t1, cfg)
            _run_path(sc, bundle, traj, diag, summary)
        else:
            traj = geodesic_dotnabla(_operator(sc, bundle), sc.t0, sc.x0, sc.v0, t1, cfg)
            _run_path(sc, bundle, traj, diag, summary, metric=False)
    elif sc.task == "forced":
        V = _potential(sc, bundle)
        traj = forced_geodesic(bundle.metric, V, sc.t0, sc.x0, sc.v0, t1, cfg, convention=sc.force_convention)
        _run_path(sc, bundle, traj, diag, summary, metric=False)
        E = np.array([kinetic_energy(bundle.metric, t, x, v) + V(t, x) for t, x, v in zip(traj.t, traj.x, traj.v)])
        diag["total_energy_series"] = [[float(t), float(e)] for t, e in zip(traj.t, E)]
        summary["force_convention"] = sc.force_convention
        summary["total_energy_drift_max"] = float(np.max(np.abs(E - E[0])))
    elif sc.task == "transport":
        dn = _operator(sc, bundle)
        if sc.connection.get("kind", "metric") == "metric":
            traj = geodesic_metric(bundle.metric, sc.t0, sc.x0, sc.v0, t1, cfg)
        else:
            traj = geodesic_dotnabla(dn, sc.t0, sc.x0, sc.v0, t1, cfg)
        _run_path(sc, bundle, traj, diag, summary, metric=False)
        w = parallel_transport(dn, traj, sc.w0, cfg)
        ws = np.array([w(t) for t in traj.t])
        diag["transported"] = [[float(t), *map(float, wi)] for t, wi in zip(traj.t, ws)]
        norms = np.array([bundle.metric.inner(t, x, wi, wi) for t, x, wi in zip(traj.t, traj.x, ws)])
        summary["w_final"] = _floats(w.final)
        summary["w_norm2_drift_max"] = float(np.max(np.abs(norms - norms[0])))
    elif sc.task == "flow":
        X = _vector_field(sc, "X", n)
        traj = flow(X, sc.t0, sc.x0, t1, cfg)
        _run_path(sc, bundle, traj, diag, summary, metric=False)
    elif sc.task == "functionals":
        if sc.path is not None:
            traj = _prescribed_path(sc, n)
        else:
            traj = geodesic_metric(bundle.metric, sc.t0, sc.x0, sc.v0, t1, cfg)
        _run_path(sc, bundle, traj, diag, summary)
        if bundle.embedding is not None:
            summary["embedded_length"] = embedded_length(bundle.embedding, traj, sc.quadrature_tol)
        try:
            summary["length_critical_residual"] = length_critical_residual(bundle.metric, traj)
        except (StationaryPathError, NotPositiveDefiniteError) as exc:
            summary["length_critical_residual"] = None
            diag["length_critical_residual"] = str(exc)
    elif sc.task == "suspension":
        s1 = t1
        traj_hat = geodesic_suspension(bundle.metric, sc.t0, sc.x0, sc.v0, s1, cfg, sc.time_velocity)
        gamma0 = traj_hat.x[:, 0]
        traj = Trajectory(traj_hat.t, traj_hat.x[:, 1:], traj_hat.v[:, 1:], traj_hat.a[:, 1:])
        ref = geodesic_metric(bundle.metric, sc.t0, sc.x0, sc.v0, s1, cfg)
        spatial = max(float(np.max(np.abs(ref(s)[0] - x))) for s, x in zip(traj.t, traj.x))
        gdot = bundle.metric.dg_dt(sc.t0, np.asarray(sc.x0))
        v0 = np.asarray(sc.v0)
        _run_path(sc, bundle, traj, diag, summary, metric=False)
        diag["gamma0_series"] = [[float(s), float(g)] for s, g in zip(traj.t, gamma0)]
        summary["gamma0_deviation_max"] = float(np.max(np.abs(gamma0 - traj.t)))
        summary["spatial_deviation_from_metric_geodesic_max"] = spatial
        summary["gdot_v0_v0"] = float(v0 @ gdot @ v0)
    elif sc.task == "bracket_probe":
        X, Y = _vector_field(sc, "X", n), _vector_field(sc, "Y", n)
        res = bracket_probe(X, Y, Event(sc.t0, np.asarray(sc.x0)), sc.probe["eps"], cfg, sc.probe["tol"])
        diag["probe"] = res.as_dict()
        summary.update(_probe_summary(res))
        summary["bracket"] = _floats(td_bracket(X, Y, Event(sc.t0, np.asarray(sc.x0))))
    elif sc.task == "torsion_probe":
        dn = _operator(sc, bundle)
        e = Event(sc.t0, np.asarray(sc.x0))
        res = torsion_loop_probe(dn, e, sc.v0, sc.w0, sc.probe["eps"], cfg, sc.probe["tol"])
        diag["probe"] = res.as_dict()
        summary.update(_probe_summary(res))
        summary["torsion_formula"] = _floats(torsion_formula(dn, sc.v0, sc.w0, e))
        summary["torsion_third_construction"] = _floats(torsion_third_construction(dn, sc.v0, sc.w0, e))
    elif sc.task == "validate":
        report = validate(bundle, n_samples=sc.validate["samples"], seed=sc.validate["seed"])
        diag["validation"] = report
        summary["rows"] = {f"{r['quantity']} [{r['comparison']}]": r["max_abs_diff"] for r in report["rows"]}
        summary["flagged"] = report["flagged"]
        summary["unexpected"] = report["unexpected"]
        if "adjudication" in report:
            summary["adjudication"] = report["adjudication"]
    return traj, diag, summary


def _probe_summary(res):
    return {
        "extrapolated_half_second_derivative": _floats(res.extrapolated_second_derivative),
        "expected": _floats(res.expected),
        "error": res.error,
        "convergence_order_estimate": float(res.convergence_order_estimate),
        "consistent": bool(res.consistent),
        "within_tolerance": bool(res.error <= res.tolerance),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def write_outputs(sc: Scenario, traj, diag, summary, output_dir):
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = {"trajectory": f"{sc.name}.trajectory.csv", "diagnostics": f"{sc.name}.diagnostics.json",
             "summary": f"{sc.name}.summary.json"}
    names.update(sc.outputs)
    written = {}
    if traj is not None:
        n = traj.dim
        header = ",".join(["t"] + [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)])
        path = out / names["trajectory"]
        np.savetxt(path, traj.to_rows(), delimiter=",", header=header, comments="", fmt="%.17g")
        written["trajectory"] = str(path)
    path = out / names["diagnostics"]
    path.write_text(json.dumps(_jsonable(diag), indent=2, sort_keys=True) + "\n")
    written["diagnostics"] = str(path)
    summary = dict(summary, schema_version=SCHEMA_VERSION, status="ok",
                   outputs=sorted(k for k in written))
    path = out / names["summary"]
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    written["summary"] = str(path)
    return written


def run(scenario, output_dir="."):
    """Load (if needed), execute and write one scenario; returns (written, summary)."""
    sc = scenario if isinstance(scenario, Scenario) else load(scenario)
    traj, diag, summary = execute(sc)
    return write_outputs(sc, traj, diag, summary, output_dir), summary
