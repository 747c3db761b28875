"""JSON scene files: named bodies and fields plus quadrature and output options.

A scene looks like::

    {"dim": 2,
     "bodies": {"K": {"kind": "ellipsoid", "semi_axes": [1.0, 2.0]}},
     "fields": {"f": {"kind": "exp_norm", "body": "K", "p": 1.5},
                "g": {"kind": "gaussian", "sigma": 1.0}},
     "quadrature": {"rel_tol": 1e-6},
     "output": {"format": "json"}}

Entries are normalized on parsing (defaults filled in), so that
``parse_scene(serialize(scene)) == scene``.  Objects are built lazily by
:meth:`Scene.body` and :meth:`Scene.field`.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import fields as F
from . import geometry as G
from .config import QuadratureConfig


class SceneError(ValueError):
    """Invalid scene; the message starts with the offending key path."""


# kind -> {key: default}; a default of ... marks a required key
BODY_KINDS = {
    "ball": {"radius": 1.0},
    "ellipsoid": {"semi_axes": None, "matrix": None},
    "cube": {"half_width": 0.5},
    "radial_table": {"nodes": ..., "values": ..., "even": False},
    "linear": {"body": ..., "matrix": ...},
}
FIELD_KINDS = {
    "gaussian": {"sigma": 1.0, "cov": None, "center": None},
    "exp_norm": {"body": ..., "p": 1.0, "c": 1.0},
    "char": {"body": ...},
    "product": {"factors": ...},
    "scaled": {"field": ..., "factor": ...},
    "linear": {"field": ..., "matrix": ...},
    "dual_difference": {"field": ...},
}
OUTPUT_KEYS = {"format": "json", "path": None}


def _fail(path: str, msg: str):
    raise SceneError(f"{path}: {msg}")


def _number(path, v, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, f"expected a number, got {v!r}")
    v = float(v)
    if not np.isfinite(v) or (positive and v <= 0):
        _fail(path, f"expected a {'positive ' if positive else ''}finite number, got {v!r}")
    return v


def _vector(path, v, dim):
    a = np.asarray(v, dtype=float) if isinstance(v, list) else None
    if a is None or a.ndim != 1 or not np.all(np.isfinite(a)):
        _fail(path, "expected a list of numbers")
    if a.size != dim:
        _fail(path, f"dimension mismatch: length {a.size}, scene dim {dim}")
    return a.tolist()


def _matrix(path, v, dim):
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        _fail(path, "expected a square matrix (list of rows)")
    if a.ndim != 2 or not np.all(np.isfinite(a)):
        _fail(path, "expected a square matrix (list of rows)")
    if a.shape != (dim, dim):
        _fail(path, f"dimension mismatch: shape {a.shape}, scene dim {dim}")
    return a.tolist()


def _entry(path, raw, kinds):
    if not isinstance(raw, dict):
        _fail(path, "expected an object")
    kind = raw.get("kind")
    if kind not in kinds:
        _fail(f"{path}.kind", f"unknown kind {kind!r} (known: {', '.join(sorted(kinds))})")
    spec = kinds[kind]
    extra = set(raw) - set(spec) - {"kind", "dim"}
    if extra:
        _fail(f"{path}.{sorted(extra)[0]}", f"unknown key for kind {kind!r}")
    out = {"kind": kind}
    for k, default in spec.items():
        if k in raw and raw[k] is not None:
            out[k] = raw[k]
        elif default is ...:
            _fail(f"{path}.{k}", f"missing required key for kind {kind!r}")
        else:
            out[k] = default
    return out


def _check_dim(path, raw, dim):
    if "dim" in raw and raw["dim"] != dim:
        _fail(f"{path}.dim", f"dimension mismatch: {raw['dim']} vs scene dim {dim}")


def _normalize_body(name, raw, dim, bodies):
    path = f"bodies.{name}"
    _check_dim(path, raw, dim)
    e = _entry(path, raw, BODY_KINDS)
    k = e["kind"]
    if k == "ball":
        e["radius"] = _number(f"{path}.radius", e["radius"], positive=True)
    elif k == "cube":
        e["half_width"] = _number(f"{path}.half_width", e["half_width"], positive=True)
    elif k == "ellipsoid":
        if (e["semi_axes"] is None) == (e["matrix"] is None):
            _fail(path, "ellipsoid needs exactly one of semi_axes, matrix")
        if e["semi_axes"] is not None:
            e["semi_axes"] = _vector(f"{path}.semi_axes", e["semi_axes"], dim)
        else:
            e["matrix"] = _matrix(f"{path}.matrix", e["matrix"], dim)
    elif k == "radial_table":
        nodes = np.asarray(e["nodes"], dtype=float)
        if nodes.ndim != 2:
            _fail(f"{path}.nodes", "expected a list of direction vectors")
        if nodes.shape[1] != dim:
            _fail(f"{path}.nodes", f"dimension mismatch: vectors of length {nodes.shape[1]}, scene dim {dim}")
        vals = np.asarray(e["values"], dtype=float)
        if vals.ndim != 1 or vals.size != nodes.shape[0]:
            _fail(f"{path}.values", "expected one radius per node")
        e["nodes"], e["values"], e["even"] = nodes.tolist(), vals.tolist(), bool(e["even"])
    elif k == "linear":
        if e["body"] not in bodies:
            _fail(f"{path}.body", f"dangling reference {e['body']!r}")
        e["matrix"] = _matrix(f"{path}.matrix", e["matrix"], dim)
    return e


def _normalize_field(name, raw, dim, bodies, fields):
    path = f"fields.{name}"
    _check_dim(path, raw, dim)
    e = _entry(path, raw, FIELD_KINDS)
    k = e["kind"]

    def ref(key, table, what):
        v = e[key]
        if not isinstance(v, str) or v not in table:
            _fail(f"{path}.{key}", f"dangling reference to {what} {v!r}")
        return v

    if k == "gaussian":
        if e["cov"] is not None:
            e["cov"] = _matrix(f"{path}.cov", e["cov"], dim)
            e["sigma"] = None
        elif isinstance(e["sigma"], list):
            e["sigma"] = _vector(f"{path}.sigma", e["sigma"], dim)
        else:
            e["sigma"] = _number(f"{path}.sigma", e["sigma"], positive=True)
        if e["center"] is not None:
            e["center"] = _vector(f"{path}.center", e["center"], dim)
    elif k in ("exp_norm", "char"):
        ref("body", bodies, "body")
        if k == "exp_norm":
            e["p"] = _number(f"{path}.p", e["p"], positive=True)
            e["c"] = _number(f"{path}.c", e["c"], positive=True)
    elif k == "product":
        fs = e["factors"]
        if not isinstance(fs, list) or len(fs) < 2:
            _fail(f"{path}.factors", "expected a list of at least two field names")
        for i, v in enumerate(fs):
            if v not in fields:
                _fail(f"{path}.factors[{i}]", f"dangling reference to field {v!r}")
    else:
        ref("field", fields, "field")
        if k == "scaled":
            e["factor"] = _number(f"{path}.factor", e["factor"], positive=True)
        elif k == "linear":
            e["matrix"] = _matrix(f"{path}.matrix", e["matrix"], dim)
    return e


def _field_deps(e):
    if e["kind"] == "product":
        return list(e["factors"])
    return [e["field"]] if "field" in e else []


def _body_deps(e):
    return [e["body"]] if e["kind"] == "linear" else []


def _check_acyclic(table, deps, section):
    state = {}

    def visit(name, trail):
        if state.get(name) == 1:
            return
        if state.get(name) == 0:
            _fail(f"{section}.{name}", "circular reference via " + " -> ".join(trail + [name]))
        state[name] = 0
        for d in deps(table[name]):
            visit(d, trail + [name])
        state[name] = 1

    for name in table:
        visit(name, [])


@dataclass
class Scene:
    dim: int
    bodies: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    output: dict = field(default_factory=lambda: dict(OUTPUT_KEYS))

    def __post_init__(self):
        self._cache = {}

    def __eq__(self, other):
        if not isinstance(other, Scene):
            return NotImplemented
        return serialize(self) == serialize(other)

    def body(self, name: str) -> G.StarBody:
        if name not in self.bodies:
            raise SceneError(f"bodies.{name}: no such body")
        key = ("body", name)
        if key not in self._cache:
            self._cache[key] = _build_body(self, self.bodies[name])
        return self._cache[key]

    def field(self, name: str) -> F.ScalarField:
        if name not in self.fields:
            raise SceneError(f"fields.{name}: no such field")
        key = ("field", name)
        if key not in self._cache:
            self._cache[key] = _build_field(self, self.fields[name])
        return self._cache[key]


def _build_body(scene, e):
    n, k = scene.dim, e["kind"]
    if k == "ball":
        return G.ball(n, e["radius"])
    if k == "cube":
        return G.cube(n, e["half_width"])
    if k == "ellipsoid":
        if e["semi_axes"] is not None:
            return G.ellipsoid(semi_axes=e["semi_axes"])
        return G.ellipsoid(e["matrix"])
    if k == "radial_table":
        return G.radial_table(e["nodes"], e["values"], is_even=e["even"])
    return G.linear_image(scene.body(e["body"]), e["matrix"])


def _build_field(scene, e):
    n, k = scene.dim, e["kind"]
    if k == "gaussian":
        if e["cov"] is not None:
            return F.make_gaussian_cov(e["cov"], e["center"])
        return F.make_gaussian(n, e["sigma"], e["center"])
    if k == "exp_norm":
        return F.make_exp_body_norm(scene.body(e["body"]), e["p"], e["c"])
    if k == "char":
        return F.make_characteristic(scene.body(e["body"]))
    if k == "product":
        return F.product(*(scene.field(v) for v in e["factors"]))
    if k == "scaled":
        return F.scale_field(scene.field(e["field"]), e["factor"])
    if k == "linear":
        return F.compose_linear(scene.field(e["field"]), e["matrix"])
    return F.dual_difference(scene.field(e["field"]))


def scene_from_dict(raw: dict) -> Scene:
    """Validate a decoded scene document."""
    if not isinstance(raw, dict):
        raise SceneError("<root>: expected an object")
    extra = set(raw) - {"dim", "bodies", "fields", "quadrature", "output"}
    if extra:
        _fail(sorted(extra)[0], "unknown top-level key")
    dim = raw.get("dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        _fail("dim", f"expected a positive integer, got {dim!r}")
    rb, rf = raw.get("bodies", {}) or {}, raw.get("fields", {}) or {}
    if not isinstance(rb, dict):
        _fail("bodies", "expected an object")
    if not isinstance(rf, dict):
        _fail("fields", "expected an object")
    bodies = {name: _normalize_body(name, e, dim, rb) for name, e in rb.items()}
    _check_acyclic(bodies, _body_deps, "bodies")
    fields = {name: _normalize_field(name, e, dim, bodies, rf) for name, e in rf.items()}
    _check_acyclic(fields, _field_deps, "fields")
    try:
        quad = QuadratureConfig.from_dict(raw.get("quadrature", {}) or {})
    except (TypeError, ValueError) as exc:
        raise SceneError(f"quadrature: {exc}") from None
    out = dict(OUTPUT_KEYS)
    ro = raw.get("output", {}) or {}
    for k in ro:
        if k not in OUTPUT_KEYS:
            _fail(f"output.{k}", "unknown key")
    out.update(ro)
    if out["format"] not in ("json", "csv"):
        _fail("output.format", f"expected 'json' or 'csv', got {out['format']!r}")
    return Scene(dim, bodies, fields, quad, out)


def parse_scene(source) -> Scene:
    """Parse a scene from a path, a JSON string or an already decoded dict."""
    if isinstance(source, dict):
        return scene_from_dict(source)
    text = str(source)
    if isinstance(source, (str, os.PathLike)) and os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"<root>: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return scene_from_dict(raw)


def serialize(scene: Scene) -> str:
    """Canonical JSON text of a scene (sorted keys, fixed indentation)."""
    doc = {"dim": scene.dim, "bodies": scene.bodies, "fields": scene.fields,
           "quadrature": scene.quadrature.to_dict(), "output": scene.output}
    return json.dumps(doc, sort_keys=True, indent=2)
