import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lcbp import Scene, SceneError, parse_scene, serialize
from lcbp.cli import emit_plot_data, main

SCENE = {
    "dim": 2,
    "bodies": {"K": {"kind": "ellipsoid", "semi_axes": [1.0, 2.0]}, "B": {"kind": "ball"}},
    "fields": {"f": {"kind": "exp_norm", "body": "K", "p": 1.5},
               "g": {"kind": "gaussian", "sigma": 1.0},
               "h": {"kind": "product", "factors": ["f", "g"]},
               "chi": {"kind": "char", "body": "B"}},
}
BALL3 = {"dim": 3, "bodies": {"B": {"kind": "ball"}},
         "fields": {"chi": {"kind": "char", "body": "B"}, "g": {"kind": "gaussian"}}}


@pytest.fixture
def scene_file(tmp_path):
    p = tmp_path / "scene.json"
    p.write_text(json.dumps(SCENE))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------- scenes

def test_scene_builds_objects():
    s = parse_scene(SCENE)
    f = s.field("h")
    assert f.dim == 2 and s.field("h") is f
    assert s.field("g")(np.zeros(2)) == 1.0
    assert s.body("K").radial(np.array([[0.0, 1.0]]))[0] == pytest.approx(2.0)


@pytest.mark.parametrize("mutate,message", [
    (lambda d: d["fields"]["f"].update(body="Q"), "fields.f.body: dangling reference to body 'Q'"),
    (lambda d: d["fields"]["g"].update(sigma=[1.0, 2.0, 3.0]), "dimension mismatch"),
    (lambda d: d["fields"].update(x={"kind": "nope"}), "fields.x"),
    (lambda d: d["fields"]["g"].update(colour=1), "fields.g"),
    (lambda d: d["fields"].update(a={"kind": "scaled", "field": "b", "factor": 2},
                                  b={"kind": "scaled", "field": "a", "factor": 2}), "circular"),
    (lambda d: d["bodies"]["B"].update(radius=-1.0), "bodies.B.radius"),
])
def test_scene_validation(mutate, message):
    d = json.loads(json.dumps(SCENE))
    mutate(d)
    with pytest.raises(SceneError, match=message.replace(".", r"\.").replace("'", ".")):
        parse_scene(d)


def test_scene_rejects_bad_json():
    with pytest.raises(SceneError, match="invalid JSON"):
        parse_scene("{not json")


@given(dim=st.integers(2, 3), sigma=st.floats(0.1, 5.0), radius=st.floats(0.1, 3.0),
       p=st.sampled_from([1.0, 1.5, 2.0]), factor=st.floats(0.1, 10.0))
def test_scene_round_trip(dim, sigma, radius, p, factor):
    raw = {"dim": dim, "bodies": {"B": {"kind": "ball", "radius": radius}},
           "fields": {"g": {"kind": "gaussian", "sigma": sigma},
                      "e": {"kind": "exp_norm", "body": "B", "p": p},
                      "s": {"kind": "scaled", "field": "e", "factor": factor}},
           "quadrature": {"rel_tol": 1e-5}}
    s = parse_scene(raw)
    text = serialize(s)
    again = parse_scene(text)
    assert again == s and serialize(again) == text


# ---------------------------------------------------------------- CLI

def test_functional_eval_json(capsys, scene_file):
    code, out, _ = run(capsys, "--scene", scene_file, "functional", "eval", "--field", "g", "--op", "J")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["value"] == pytest.approx(2 * math.pi, rel=1e-6)


def test_global_flags_after_subcommand(capsys, scene_file):
    code, out, _ = run(capsys, "functional", "eval", "--field", "g", "--op", "A", "--dir", "1,0",
                       "--scene", scene_file, "--format", "csv")
    assert code == 0
    rows = dict(r[:2] for r in csv.reader(io.StringIO(out)) if len(r) >= 2)
    assert float(rows["result.value"]) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-6)


def test_output_is_byte_identical(capsys, scene_file, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"o{k}.json"
        assert main(["--scene", scene_file, "--seed", "3", "--out", str(path), "functional", "eval",
                     "--field", "h", "--op", "Ent"]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_profile_plot_data(capsys, scene_file):
    code, out, _ = run(capsys, "--scene", scene_file, "--format", "csv", "functional", "profile",
                       "--field", "g", "--dir", "0,1")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["series", "x", "y"] and len(rows) == 62
    mid = rows[31]
    assert float(mid[1]) == 0.0 and float(mid[2]) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-6)


def test_emit_plot_data_errors(tmp_path):
    with pytest.raises(ValueError, match="no plot data"):
        emit_plot_data({})
    with pytest.raises(ValueError, match="lengths differ"):
        emit_plot_data({"a": ([1, 2], [1])})
    p = tmp_path / "plot.csv"
    text = emit_plot_data({"a": ([0.0, 1.0], [2.0, 3.0])}, p)
    assert p.read_text() == text == "series,x,y\na,0.0,2.0\na,1.0,3.0\n"


def test_error_exit_codes(capsys, scene_file):
    code, _, err = run(capsys, "--scene", scene_file, "functional", "eval", "--field", "nope", "--op", "J")
    assert code == 2 and err.startswith("lcbp: error: fields.nope")
    code, _, err = run(capsys, "--scene", scene_file, "functional", "eval", "--field", "g", "--op", "A",
                       "--dir", "1,0,0")
    assert code == 2 and "dimension mismatch" in err
    code, _, err = run(capsys, "functional", "eval", "--field", "g", "--op", "J")
    assert code == 2 and "needs --scene" in err
    code, _, err = run(capsys, "suite", "run", "--name", "bogus")
    assert code == 2 and "unknown suite" in err
    with pytest.raises(SystemExit):
        main(["functional", "eval", "--op", "bogus"])


def test_suite_run_and_csv(capsys, tmp_path):
    path = tmp_path / "r.csv"
    code, out, _ = run(capsys, "--seed", "5", "suite", "run", "--name", "moments", "--csv", str(path))
    assert code == 0
    doc = json.loads(out)
    assert doc["suite"] == "moments" and all(r["pass"] for r in doc["reports"])
    rows = list(csv.reader(path.open()))
    assert rows[0][0] == "name" and len(rows) == len(doc["reports"]) + 1


def test_intersect_and_membership(capsys, tmp_path):
    p = tmp_path / "ball3.json"
    p.write_text(json.dumps(BALL3))
    code, out, _ = run(capsys, "--scene", str(p), "intersect", "eval", "--field", "chi", "--points", "0.5,0,0",
                       "--route-check")
    assert code == 0
    doc = json.loads(out)
    assert doc["values"][0] == pytest.approx(math.exp(-0.5 / math.pi), rel=1e-6)
    assert doc["reports"][0]["pass"]
    code, out, _ = run(capsys, "--scene", str(p), "intersect", "membership", "--field", "g", "--lmax", "8")
    assert code == 0 and json.loads(out)["verdict"] == "yes"


def test_convex_legendre_of_quadratic(capsys, tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"dim": 1, "fields": {"g": {"kind": "gaussian"}}}))
    out_csv = tmp_path / "conj.csv"
    code, _, _ = run(capsys, "--scene", str(p), "--out", str(out_csv), "--format", "csv", "convex", "legendre",
                     "--field", "g", "--half-width", "3", "--resolution", "121")
    assert code == 0
    from lcbp.convexcalc import from_csv
    g = from_csv(out_csv.read_text())
    y = g.axes()[0]
    mid = np.abs(y) <= 1.5
    assert np.max(np.abs(g.values[mid] - 0.5 * y[mid] ** 2)) < 1e-2


def test_bp_counterexample_command(capsys):
    code, out, _ = run(capsys, "bp", "counterexample", "--directions", "500")
    doc = json.loads(out)
    assert code == 0 and doc["verdict"]["domination"] and not doc["verdict"]["mass_ordered"]
    assert doc["reports"][0]["metadata"]["radius"] == pytest.approx(0.9101920491517972)
