import json

import numpy as np
import pytest

from tdgeom import scenario as scn
from tdgeom.errors import InputError, ScenarioError
from tdgeom.expressions import Expression, compile_matrix, compile_vector

BASE = {"schema_version": 1, "name": "g", "model": {"name": "conformal_plane"}, "task": "geodesic",
        "t0": 0.0, "t1": 1.0, "x0": [0.0, 0.0], "v0": [1.0, 0.0]}


def _with(**kw):
    d = json.loads(json.dumps(BASE))
    for k, v in kw.items():
        if v is None:
            d.pop(k)
        else:
            d[k] = v
    return d


@pytest.mark.parametrize("change, path", [
    ({"x0": [0.0, "a"]}, "x0[1]"),
    ({"integrator": {"abs_tol": -1.0}}, "integrator.abs_tol"),
    ({"v0": None}, "v0"),
    ({"schema_version": 2}, "schema_version"),
    ({"task": "dance"}, "task"),
])
def test_schema_errors_name_the_field(change, path):
    with pytest.raises(ScenarioError) as info:
        scn.from_dict(_with(**change))
    assert info.value.path == path
    assert path in str(info.value)


def test_unknown_keys_rejected():
    with pytest.raises(ScenarioError):
        scn.from_dict(_with(colour="red"))


def test_defaults_filled():
    sc = scn.from_dict(BASE)
    assert sc.integrator["method"] == "dopri45_adaptive"
    assert sc.force_convention == "lagrangian"
    assert sc.connection == {"kind": "metric"}


def test_round_trip():
    sc = scn.from_dict(_with(integrator={"method": "rk4_fixed", "step": 0.01}))
    assert scn.loads(sc.dump()) == sc


def test_load_uses_file_stem(tmp_path):
    d = _with(name=None)
    p = tmp_path / "my_case.yaml"
    p.write_text(json.dumps(d))
    assert scn.load(p).name == "my_case"
    with pytest.raises(ScenarioError):
        scn.load(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("task: [unclosed")
    with pytest.raises(ScenarioError):
        scn.load(bad)


def test_geodesic_outputs(tmp_path):
    written, summary = scn.run(scn.from_dict(BASE), tmp_path)
    rows = np.loadtxt(written["trajectory"], delimiter=",", skiprows=1)
    assert open(written["trajectory"]).readline().strip() == "t,x1,x2,v1,v2"
    assert rows[0, 0] == 0.0 and rows[-1, 0] == 1.0
    assert np.allclose(rows[-1, 1:3], [(1 - np.exp(-2)) / 2, 0.0], atol=1e-8)
    saved = json.loads(open(written["summary"]).read())
    assert saved["status"] == "ok" and saved["task"] == "geodesic"


def test_empty_interval_single_row(tmp_path):
    written, _ = scn.run(scn.from_dict(_with(t1=0.0)), tmp_path)
    rows = np.loadtxt(written["trajectory"], delimiter=",", skiprows=1, ndmin=2)
    assert rows.shape == (1, 5)
    assert rows[0].tolist() == [0.0, 0.0, 0.0, 1.0, 0.0]


def test_fields_from_expressions(tmp_path):
    d = _with(task="flow", model={"name": "euclidean"}, fields={"X": ["t", "0"]}, v0=None)
    _, summary = scn.run(scn.from_dict(d), tmp_path)
    assert summary["endpoint"]["x"][0] == pytest.approx(0.5, abs=1e-9)


def test_bad_expression_is_input_error(tmp_path):
    d = _with(task="flow", model={"name": "euclidean"}, fields={"X": ["__import__('os')", "0"]}, v0=None)
    with pytest.raises(InputError):
        scn.run(scn.from_dict(d), tmp_path)


def test_runs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    wa, _ = scn.run(scn.from_dict(BASE), a)
    wb, _ = scn.run(scn.from_dict(BASE), b)
    for key in wa:
        assert open(wa[key], "rb").read() == open(wb[key], "rb").read()


# --------------------------------------------------------------------------
# expressions


def test_expression_evaluation():
    ex = Expression("sin(pi*t) + x1**2 - e*x2", 2)
    assert ex(0.5, [2.0, 1.0]) == pytest.approx(1 + 4 - np.e)
    f = compile_vector(["x2", "-x1", 3], 2)
    assert f(0.0, np.array([1.0, 2.0])).tolist() == [2.0, -1.0, 3.0]
    M = compile_matrix([["1", "t"], ["0", "x1"]], 2)
    assert M(2.0, [5.0, 0.0]).tolist() == [[1.0, 2.0], [0.0, 5.0]]


@pytest.mark.parametrize("src", [
    "__import__('os')", "x1.real", "[x1]", "x3", "open", "lambda: 1", "x1 if t else 0", "'a'",
    "sin(x1, x2)", "y", "True", "x1 < 2", "(1).__class__",
])
def test_expression_whitelist(src):
    with pytest.raises(InputError):
        Expression(src, 2)


def test_matrix_shape_checked():
    with pytest.raises(InputError):
        compile_matrix([["1", "0"]], 2)
