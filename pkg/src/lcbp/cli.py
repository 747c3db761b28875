"""Command-line front end: ``lcbp <command> <action> [options]``.

Exit status is 0 when the command succeeds and every report it produced
passes, 1 when some report fails, and 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import convexcalc as C
from . import experiments as X
from . import functionals as FN
from . import geometry as G
from . import intersection as I
from .config import QuadratureConfig
from .fields import field_potential
from .reports import InequalityReport, _clean
from .scene import Scene, SceneError, parse_scene


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def dumps(doc) -> str:
    """Canonical JSON: sorted keys, fixed indentation, no run-dependent data."""
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def reports_csv(reports: list[InequalityReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "lhs", "rhs", "margin", "tolerance", "pass", "equality_expected"])
    for r in reports:
        d = r.to_dict()
        w.writerow([d["name"], repr(d["lhs"]) if isinstance(d["lhs"], float) else d["lhs"],
                    repr(d["rhs"]) if isinstance(d["rhs"], float) else d["rhs"],
                    repr(d["margin"]) if isinstance(d["margin"], float) else d["margin"],
                    repr(d["tolerance"]), int(d["pass"]), int(d["equality_expected"])])
    return buf.getvalue()


def emit_plot_data(series: dict, path=None) -> str:
    """Write named (x, y) series as CSV ``series,x,y``, one row per sample.

    Series keep their insertion order and samples their given order.  Returns
    the CSV text; writes it to ``path`` when given.
    """
    if not series or all(len(x) == 0 for x, _ in series.values()):
        raise ValueError("no plot data: empty series")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "x", "y"])
    for name, (xs, ys) in series.items():
        if len(xs) != len(ys):
            raise ValueError(f"series {name!r}: x and y lengths differ")
        for x, y in zip(xs, ys):
            w.writerow([name, repr(float(x)), repr(float(y))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _write(text: str, path) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _vec(text: str, dim: int | None = None) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}; use comma-separated numbers") from None
    if dim is not None and v.size != dim:
        raise UsageError(f"dimension mismatch: vector {text!r} has {v.size} entries, scene dim is {dim}")
    return v


def _points(text: str, dim: int) -> np.ndarray:
    return np.array([_vec(p, dim) for p in text.split(";") if p.strip()])


# --------------------------------------------------------------------------
# context
# --------------------------------------------------------------------------

class Context:
    def __init__(self, args):
        self.args = args
        self.scene: Scene | None = parse_scene(args.scene) if args.scene else None
        base = self.scene.quadrature if self.scene else QuadratureConfig()
        changes = {"seed": args.seed}
        if args.rel_tol is not None:
            changes["rel_tol"] = args.rel_tol
        self.cfg = base.with_(**changes)
        fmt = args.format or (self.scene.output["format"] if self.scene else "json")
        self.format = fmt
        self.out = args.out or (self.scene.output["path"] if self.scene else None)

    def need_scene(self) -> Scene:
        if self.scene is None:
            raise UsageError("this command needs --scene")
        return self.scene

    def field(self, name):
        return self.need_scene().field(name)

    def body(self, name):
        return self.need_scene().body(name)

    def emit(self, doc: dict, reports: list[InequalityReport] | None = None, csv_text: str | None = None) -> int:
        if self.format == "csv":
            if csv_text is None:
                csv_text = reports_csv(reports) if reports is not None else _flat_csv(doc)
            _write(csv_text, self.out)
        else:
            _write(dumps(doc), self.out)
        return 0 if reports is None or all(r.passed for r in reports) else 1


def _flat_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])

    def walk(prefix, v):
        if isinstance(v, dict):
            for k in v:
                walk(f"{prefix}.{k}" if prefix else k, v[k])
        elif isinstance(v, list):
            for i, x in enumerate(v):
                walk(f"{prefix}[{i}]", x)
        else:
            w.writerow([prefix, repr(v) if isinstance(v, float) else v])

    walk("", _clean(doc))
    return buf.getvalue()


def _result(r) -> dict:
    return r.to_dict() if hasattr(r, "to_dict") else {"value": float(r)}


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_functional(ctx: Context) -> int:
    a = ctx.args
    f = ctx.field(a.field)
    n = f.dim
    cfg = ctx.cfg
    if a.action == "profile":
        u = _vec(a.dir, n)
        ts = np.linspace(a.t_min, a.t_max, a.samples)
        ys = [FN.parallel_section(f, u, float(t), cfg).value for t in ts]
        return ctx.emit({}, csv_text=emit_plot_data({f"A[{a.field}]": (ts, ys)}, None)) if ctx.format == "csv" \
            else ctx.emit({"command": "functional profile", "field": a.field, "t": ts.tolist(), "A": ys,
                           "config": cfg.to_dict()})
    if a.action == "upsilon":
        g = ctx.field(_required(a.other, "--other"))
        ts = np.linspace(0.0, 1.0, a.samples)
        ups = FN.log_mass_interpolation(f, g, ts, cfg)
        d2 = ups[2:] - 2 * ups[1:-1] + ups[:-2]
        rep = InequalityReport("log-mass-convexity", float(-d2.min()) if d2.size else 0.0, 0.0, 1e-6)
        if ctx.format == "csv":
            ctx.emit({}, csv_text=emit_plot_data({"upsilon": (ts, ups)}, None))
            return 0 if rep.passed else 1
        return ctx.emit({"command": "functional upsilon", "t": ts.tolist(), "upsilon": ups.tolist(),
                         "reports": [rep.to_dict()], "config": cfg.to_dict()}, [rep])
    op = a.op
    doc = {"command": "functional eval", "op": op, "field": a.field, "config": cfg.to_dict()}
    if op == "J":
        doc["result"] = _result(FN.total_mass(f, cfg))
    elif op == "Ent":
        doc["result"] = _result(FN.entropy(f, cfg))
    elif op == "A":
        u = _vec(_required(a.dir, "--dir"), n)
        doc.update(direction=u.tolist(), t=a.t, result=_result(FN.parallel_section(f, u, a.t, cfg)))
    elif op == "radon":
        u = _vec(_required(a.dir, "--dir"), n)
        doc.update(direction=u.tolist(), r=a.t, result=_result(FN.radon(f, u, a.t, cfg)))
    elif op == "dualmix":
        g = ctx.field(_required(a.other, "--other"))
        doc.update(other=a.other, result=_result(FN.dual_mixed(f, g, cfg)))
    return ctx.emit(doc)


def _required(v, flag):
    if v is None:
        raise UsageError(f"{flag} is required for this operation")
    return v


def cmd_intersect(ctx: Context) -> int:
    a, cfg = ctx.args, ctx.cfg
    if a.action == "eval":
        f = ctx.field(_required(a.field, "--field"))
        pts = _points(_required(a.points, "--points"), f.dim)
        vals = np.atleast_1d(I.intersection_function(f, pts, cfg))
        doc = {"command": "intersect eval", "field": a.field, "points": pts.tolist(), "values": vals.tolist(),
               "config": cfg.to_dict()}
        if a.route_check:
            alt = np.atleast_1d(I.if_via_ball_body(f, pts, cfg))
            dev = float(np.max(np.abs(alt - vals) / np.maximum(vals, 1e-300)))
            rep = InequalityReport("route-equivalence", dev, 0.0, 5e-3)
            doc["ball_body_values"] = alt.tolist()
            doc["reports"] = [rep.to_dict()]
            return ctx.emit(doc, [rep])
        return ctx.emit(doc)
    if a.action == "body":
        K = ctx.body(_required(a.body, "--body"))
        IK = I.intersection_body(K, cfg, a.method)
        dirs = _points(a.dirs, K.dim) if a.dirs else np.eye(K.dim)
        return ctx.emit({"command": "intersect body", "body": a.body, "method": a.method,
                         "directions": dirs.tolist(), "radial": IK.radial(dirs).tolist(), "config": cfg.to_dict()})
    if a.action == "ballbody":
        f = ctx.field(_required(a.field, "--field"))
        K = I.ball_body(f, a.p, cfg)
        dirs = _points(a.dirs, f.dim) if a.dirs else np.eye(f.dim)
        return ctx.emit({"command": "intersect ballbody", "field": a.field, "p": a.p,
                         "directions": dirs.tolist(), "radial": K.radial(dirs).tolist(), "config": cfg.to_dict()})
    # membership
    f = ctx.field(_required(a.field, "--field"))
    v = I.is_intersection_function_n3(f, a.lmax, cfg=cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["l", "m", "radial_coefficient", "preimage_coefficient"])
    for l, m, rc, hc in v.coefficients:
        w.writerow([l, m, repr(rc), repr(hc)])
    if a.table:
        with open(a.table, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    return ctx.emit({"command": "intersect membership", "field": a.field, **v.to_dict(), "config": cfg.to_dict()},
                    csv_text=buf.getvalue())


def cmd_bp(ctx: Context) -> int:
    a, cfg = ctx.args, ctx.cfg
    if a.action == "counterexample":
        v, s = X.bp_counterexample_cube_ball(a.dim, a.directions, seed=cfg.seed, cfg=cfg)
        rep = InequalityReport(f"bp-negative[n={a.dim}]", s["ball_volume"] + 10.0 * s["ball_volume_error"]
                               if v.domination else math.inf, 1.0, 0.0, metadata=s)
        return ctx.emit({"command": "bp counterexample", "verdict": v.to_dict(), "reports": [rep.to_dict()],
                         "config": cfg.to_dict()}, [rep])
    f, g = ctx.field(_required(a.f, "--f")), ctx.field(_required(a.g, "--g"))
    v = X.bp_check(f, g, cfg=cfg)
    return ctx.emit({"command": "bp check", "f": a.f, "g": a.g, "verdict": v.to_dict(), "config": cfg.to_dict()})


def cmd_suite(ctx: Context) -> int:
    a, cfg = ctx.args, ctx.cfg
    if a.name != "all" and a.name not in X.SUITES:
        raise UsageError(f"unknown suite {a.name!r} (known: all, {', '.join(X.SUITES)})")
    reports = X.run_suite(a.name, seed=cfg.seed, cfg=cfg)
    doc = {"suite": a.name, "reports": [r.to_dict() for r in reports], "config": cfg.to_dict()}
    if a.csv:
        with open(a.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(reports_csv(reports))
    return ctx.emit(doc, reports)


def _grid_input(ctx, name, path):
    if path:
        with open(path, encoding="utf-8") as fh:
            return C.from_csv(fh.read())
    if name is None:
        raise UsageError("give a field name or a grid CSV")
    a = ctx.args
    f = ctx.field(name)
    box = np.tile([-a.half_width, a.half_width], (f.dim, 1))
    return C.tabulate(field_potential(f), box, a.resolution)


def cmd_convex(ctx: Context) -> int:
    a = ctx.args
    phi = _grid_input(ctx, a.field, a.grid)
    if a.action == "legendre":
        out = C.legendre_transform(phi, method=a.method)
    elif a.action == "infconv":
        out = C.infimal_convolution(phi, _grid_input(ctx, a.other, a.other_grid), method=a.method
                                   if a.method != "envelope" else "direct")
    elif a.action == "harmonic":
        out = C.harmonic_combination(phi, _grid_input(ctx, a.other, a.other_grid), a.t)
    else:
        psi = _grid_input(ctx, a.other, a.other_grid)
        dev = C.harmonic_identity_deviation(phi, psi, a.t)
        rep = InequalityReport("harmonic-identity", dev, 0.0, a.identity_tol)
        return ctx.emit({"command": "convex identity", "deviation": dev, "reports": [rep.to_dict()]}, [rep])
    text = C.to_csv(out)
    if ctx.format == "json":
        return ctx.emit({"command": f"convex {a.action}", "box": out.box.tolist(),
                         "values": np.where(np.isinf(out.values), math.inf, out.values).tolist()})
    return ctx.emit({}, csv_text=text)


def cmd_geometry(ctx: Context) -> int:
    a, cfg = ctx.args, ctx.cfg
    K = ctx.body(a.body)
    doc = {"command": f"geometry {a.action}", "body": a.body, "config": cfg.to_dict()}
    if a.action == "volume":
        doc["result"] = _result(G.volume(K, cfg))
    elif a.action == "section":
        u = _vec(_required(a.dir, "--dir"), K.dim)
        doc.update(direction=u.tolist(), result=_result(G.central_section_volume(K, u, cfg)))
    elif a.action == "radial":
        dirs = _points(_required(a.dirs, "--dirs"), K.dim)
        doc.update(directions=dirs.tolist(), radial=K.radial(dirs).tolist())
    else:
        L = ctx.body(_required(a.other, "--other"))
        doc.update(other=a.other, p=a.p, result=_result(G.dual_mixed_volume(K, L, a.p, cfg)))
    return ctx.emit(doc)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _common(defaults: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--scene", default=d(None), help="scene JSON file")
    p.add_argument("--seed", type=int, default=d(0), help="seed for every random choice (default 0)")
    p.add_argument("--rel-tol", type=float, default=d(None), help="relative tolerance override")
    p.add_argument("--out", default=d(None), help="output path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=d(None))
    return p


def build_parser() -> argparse.ArgumentParser:
    leaf = [_common(False)]
    parser = argparse.ArgumentParser(prog="lcbp", parents=[_common(True)],
                                     description="Log-concave functional geometry toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    fn = sub.add_parser("functional", help="total mass, entropy, sections, dual mixed volume")
    fsub = fn.add_subparsers(dest="action", required=True)
    p = fsub.add_parser("eval", parents=leaf)
    p.add_argument("--field", required=True)
    p.add_argument("--op", choices=("J", "Ent", "A", "radon", "dualmix"), required=True)
    p.add_argument("--dir", help="direction, e.g. 1,0")
    p.add_argument("--t", type=float, default=0.0, help="hyperplane offset (A) or radius (radon)")
    p.add_argument("--other", help="second field for dualmix")
    p = fsub.add_parser("profile", parents=leaf, help="plot data of t -> A_{f,u}(t)")
    p.add_argument("--field", required=True)
    p.add_argument("--dir", required=True)
    p.add_argument("--t-min", type=float, default=-3.0)
    p.add_argument("--t-max", type=float, default=3.0)
    p.add_argument("--samples", type=int, default=61)
    p = fsub.add_parser("upsilon", parents=leaf, help="plot data of t -> log J(f^(1-t) g^t)")
    p.add_argument("--field", required=True)
    p.add_argument("--other", required=True)
    p.add_argument("--samples", type=int, default=11)

    it = sub.add_parser("intersect", help="intersection functions and bodies")
    isub = it.add_subparsers(dest="action", required=True)
    p = isub.add_parser("eval", parents=leaf)
    p.add_argument("--field", required=True)
    p.add_argument("--points", required=True, help="points separated by ';', coordinates by ','")
    p.add_argument("--route-check", action="store_true", help="compare with the Ball-body route")
    p = isub.add_parser("body", parents=leaf)
    p.add_argument("--body", required=True)
    p.add_argument("--method", choices=("radon", "section"), default="radon")
    p.add_argument("--dirs")
    p = isub.add_parser("ballbody", parents=leaf)
    p.add_argument("--field", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--dirs")
    p = isub.add_parser("membership", parents=leaf)
    p.add_argument("--field", required=True)
    p.add_argument("--lmax", type=int, default=16)
    p.add_argument("--table", help="also write the coefficient table CSV here")

    bp = sub.add_parser("bp", help="Busemann-Petty comparisons")
    bsub = bp.add_subparsers(dest="action", required=True)
    p = bsub.add_parser("check", parents=leaf)
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p = bsub.add_parser("counterexample", parents=leaf)
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--directions", type=int, default=600)

    su = sub.add_parser("suite", help="verification suites")
    ssub = su.add_subparsers(dest="action", required=True)
    p = ssub.add_parser("run", parents=leaf)
    p.add_argument("--name", required=True)
    p.add_argument("--csv", help="also write the reports as CSV here")

    cx = sub.add_parser("convex", help="grid Legendre transform and friends")
    csub = cx.add_subparsers(dest="action", required=True)
    for name in ("legendre", "infconv", "harmonic", "identity"):
        p = csub.add_parser(name, parents=leaf)
        p.add_argument("--field", help="field whose potential -log f is tabulated")
        p.add_argument("--grid", help="grid CSV input instead of --field")
        p.add_argument("--half-width", type=float, default=2.0)
        p.add_argument("--resolution", type=int, default=65)
        if name != "legendre":
            p.add_argument("--other")
            p.add_argument("--other-grid")
        if name in ("harmonic", "identity"):
            p.add_argument("--t", type=float, default=1.0)
        if name == "identity":
            p.add_argument("--identity-tol", type=float, default=1e-2)
        p.add_argument("--method", choices=("envelope", "brute", "direct", "conjugate"), default="envelope")

    ge = sub.add_parser("geometry", help="star body volumes and sections")
    gsub = ge.add_subparsers(dest="action", required=True)
    for name in ("volume", "section", "radial", "dualmix"):
        p = gsub.add_parser(name, parents=leaf)
        p.add_argument("--body", required=True)
        if name == "section":
            p.add_argument("--dir", required=True)
        if name == "radial":
            p.add_argument("--dirs", required=True)
        if name == "dualmix":
            p.add_argument("--other", required=True)
            p.add_argument("--p", type=float, default=1.0)
    return parser


COMMANDS = {"functional": cmd_functional, "intersect": cmd_intersect, "bp": cmd_bp, "suite": cmd_suite,
            "convex": cmd_convex, "geometry": cmd_geometry}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ctx = Context(args)
        return COMMANDS[args.command](ctx)
    except (SceneError, UsageError, ValueError, OSError) as exc:
        print(f"lcbp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
