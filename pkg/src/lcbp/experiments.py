"""Busemann-Petty style comparisons and the inequality suites.

Everything here composes the lower modules: sections and masses of fields,
closed forms for exp(-|x|_{aK}^p), the cube/ball section comparison in high
dimension, the even-symmetrization construction for non-even fields, and the
seeded report suites.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ._kernels import sinc_product_quadrature
from .config import QuadratureConfig
from .fields import (
    DualDifferenceField,
    ScalarField,
    check_even,
    dual_difference,
    make_characteristic,
    make_exp_body_norm,
    make_gaussian,
    make_gaussian_cov,
    product,
    scale_field,
)
from .functionals import (
    DegenerateMassError,
    dual_mixed,
    entropy,
    log_mass_interpolation,
    total_mass,
)
from .geometry import (
    StarBody,
    ball,
    central_section_volume,
    cube,
    dual_mixed_volume,
    ellipsoid,
    linear_image,
    star_body,
    volume,
)
from .intersection import (
    IntersectionFunctionField,
    ball_body,
    busemann_constant,
    intersection_function,
    intersection_mass,
    moment_radius,
)
from .quadrature import ball_volume, direction_grid, integrate_hyperplane, quasi_random_directions
from .reports import InequalityReport, _clean

__all__ = [
    "InequalityReport", "BPVerdict", "ClosedForm", "closed_form_oracle", "bp_check", "random_even_field",
    "cube_section", "cube_section_exact", "cube_section_monte_carlo", "bp_counterexample_cube_ball",
    "demo_noneven_necessity", "run_suite", "SUITES", "counterexample_ball_radius",
]


# --------------------------------------------------------------------------
# closed forms for exp(-|x|_{aK}^p)
# --------------------------------------------------------------------------

@dataclass
class ClosedForm:
    """Exact functionals of f = exp(-|x|_{aK}^p) in terms of V(K) and its sections."""

    body: StarBody
    a: float
    p: float
    volume: float
    cfg: QuadratureConfig

    @property
    def n(self) -> int:
        return self.body.dim

    def section(self, u) -> float:
        n, p = self.n, self.p
        sec = central_section_volume(self.body, u, self.cfg).value
        return math.exp(gammaln(1.0 + (n - 1) / p)) * self.a ** (n - 1) * sec

    @property
    def J(self) -> float:
        return math.exp(gammaln(1.0 + self.n / self.p)) * self.a**self.n * self.volume

    @property
    def selfdual(self) -> float:
        return self.n / self.p * self.J

    @property
    def Ent(self) -> float:
        return -self.J * (self.n / self.p + math.log(self.J))

    def to_dict(self) -> dict:
        return {"J": self.J, "selfdual": self.selfdual, "Ent": self.Ent, "a": self.a, "p": self.p}


def closed_form_oracle(K: StarBody, a: float, p: float = 1.0, cfg: QuadratureConfig | None = None) -> ClosedForm:
    """Closed forms for f = exp(-|x|_{aK}^p).

    With p = 1: A(0) = a^{n-1} Gamma(n) V_{n-1}(K cap u^perp),
    J = a^n Gamma(n+1) V(K), selfdual = n J, Ent = -J (n + log J).
    """
    cfg = cfg or QuadratureConfig()
    if a <= 0 or p <= 0:
        raise ValueError("a and p must be positive")
    return ClosedForm(K, float(a), float(p), volume(K, cfg).value, cfg)


# --------------------------------------------------------------------------
# Busemann-Petty comparison of two fields
# --------------------------------------------------------------------------

@dataclass
class BPVerdict:
    domination: bool
    mass_ordered: bool
    selfdual_ordered: bool
    entropy_ordered: bool
    consistent_with_theorem: bool
    worst_direction: list
    worst_ratio: float
    values: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _clean({
            "domination": self.domination, "mass_ordered": self.mass_ordered,
            "selfdual_ordered": self.selfdual_ordered, "entropy_ordered": self.entropy_ordered,
            "consistent_with_theorem": self.consistent_with_theorem,
            "worst_direction": list(self.worst_direction), "worst_ratio": self.worst_ratio,
            "values": self.values,
        })


def _tolerance(errors, scale: float, rel: float) -> float:
    """5x the propagated error estimates, floored at rel * scale."""
    return max(5.0 * float(sum(errors)), rel * abs(scale))


def _require_even(f: ScalarField, label: str) -> None:
    if not f.is_even or check_even(f) > 1e-9 * max(f.sup_bound, 1e-300):
        raise ValueError(f"{label} is not even: the comparison is only meaningful for even fields, "
                         "since a non-even field always admits an even competitor with smaller "
                         "sections and larger self dual mixed volume")


def grid_sections(f: ScalarField, dirs: np.ndarray, cfg: QuadratureConfig) -> tuple[np.ndarray, np.ndarray]:
    """A_{f,u}(0) with error estimates for each row u of ``dirs``.

    Central sections of an even field satisfy A(u) = A(-u), so antipodal
    rows are integrated once.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    if f.is_even:
        lead = np.argmax(np.abs(dirs) > 1e-12, axis=1)
        sign = np.sign(dirs[np.arange(len(dirs)), lead])
        keys = np.round(dirs * sign[:, None], 12) + 0.0
        _, first, back = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        reps = dirs[first]
    else:
        reps, back = dirs, np.arange(len(dirs))
    vals, errs = np.empty(len(reps)), np.empty(len(reps))
    for i, u in enumerate(reps):
        r = integrate_hyperplane(f, u, 0.0, cfg)
        vals[i], errs[i] = r.value, r.error_estimate
    back = np.asarray(back).reshape(-1)
    return vals[back], errs[back]


def bp_check(f: ScalarField, g: ScalarField, grid=None, cfg: QuadratureConfig | None = None,
             sections=None) -> BPVerdict:
    """Compare central sections of f and g over a direction grid, then J,
    the self dual mixed volume and the entropy.

    Conclusions use 5x the quadrature error estimates (floored at rel_tol)
    as tolerance.  The entropy comparison rescales both fields by
    c = max(1/J(f), 1/J(g)).  ``sections`` may carry precomputed
    ((A_f, err_f), (A_g, err_g)) on the grid.
    """
    cfg = cfg or QuadratureConfig()
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    _require_even(f, "f")
    _require_even(g, "g")
    n = f.dim
    rel = cfg.tol(n)
    dirs = (grid.nodes if grid is not None else direction_grid(n, 1).nodes)
    if sections is None:
        (Af, ef), (Ag, eg) = grid_sections(f, dirs, cfg), grid_sections(g, dirs, cfg)
    else:
        (Af, ef), (Ag, eg) = sections
    slack = np.maximum(5.0 * (ef + eg), rel * np.maximum(Af, Ag))
    ratio = Af / Ag
    worst = int(np.argmax(ratio))
    domination = bool(np.all(Af <= Ag + slack))

    Jf, Jg = total_mass(f, cfg), total_mass(g, cfg)
    if not (Jf.value > 0 and Jg.value > 0):
        raise DegenerateMassError("degenerate mass")
    Df, Dg = dual_mixed(f, f, cfg), dual_mixed(g, g, cfg)
    Ef, Eg = entropy(f, cfg), entropy(g, cfg)
    c = max(1.0 / Jf.value, 1.0 / Jg.value)
    mass_ordered = Jf.value <= Jg.value + _tolerance([Jf.error_estimate, Jg.error_estimate], max(Jf.value, Jg.value), rel)
    selfdual_ordered = Df.value <= Dg.value + _tolerance([Df.error_estimate, Dg.error_estimate],
                                                         max(abs(Df.value), abs(Dg.value)), rel)
    entropy_ordered = c * Ef.value >= c * Eg.value - c * _tolerance([Ef.error_estimate, Eg.error_estimate],
                                                                    max(abs(Ef.value), abs(Eg.value)), rel)
    if 2 <= n <= 4:
        consistent = (not domination) or (mass_ordered and selfdual_ordered and entropy_ordered)
    else:
        consistent = True
    values = {
        "n": n, "directions": len(dirs), "J_f": Jf.value, "J_g": Jg.value, "J_err": Jf.error_estimate + Jg.error_estimate,
        "selfdual_f": Df.value, "selfdual_g": Dg.value, "selfdual_err": Df.error_estimate + Dg.error_estimate,
        "Ent_f": Ef.value, "Ent_g": Eg.value, "Ent_err": Ef.error_estimate + Eg.error_estimate, "entropy_scale": c,
        "max_section_ratio": float(ratio[worst]),
    }
    return BPVerdict(domination, bool(mass_ordered), bool(selfdual_ordered), bool(entropy_ordered), bool(consistent),
                     dirs[worst].tolist(), float(ratio[worst]), values)


# --------------------------------------------------------------------------
# seeded generators
# --------------------------------------------------------------------------

def _rotation(n: int, rng) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_symmetric_body(n: int, rng, kind: str | None = None) -> StarBody:
    """Random origin-symmetric ellipsoid or parallelepiped."""
    kind = kind or ("ellipsoid" if rng.random() < 0.6 else "polytope")
    R = _rotation(n, rng)
    axes = rng.uniform(0.6, 1.8, n)
    if kind == "ellipsoid":
        return ellipsoid(R @ np.diag(1.0 / axes**2) @ R.T)
    return linear_image(cube(n, 0.5), R @ np.diag(2.0 * axes))


def random_even_field(n: int, rng, family: str | None = None, polytopes: bool = False) -> ScalarField:
    """Even log-concave field: Gaussian with random diagonal covariance,
    exp(-|x|_K^p) over a random symmetric body, or their product.

    Bodies are ellipsoids unless ``polytopes`` also admits parallelepipeds.
    Their sections have kinks in the direction, which sphere grids resolve
    slowly, so suites that integrate sections over the sphere leave them out.
    """
    family = family or ["gaussian", "exp_norm", "product"][int(rng.integers(3))]
    kind = None if polytopes else "ellipsoid"
    if family == "gaussian":
        return make_gaussian(n, rng.uniform(0.5, 1.8, n))
    if family == "exp_norm":
        return make_exp_body_norm(random_symmetric_body(n, rng, kind), p=float(rng.choice([1.0, 1.5, 2.0])))
    if family == "product":
        return product(make_gaussian(n, rng.uniform(0.8, 2.0, n)),
                       make_exp_body_norm(random_symmetric_body(n, rng, kind), p=float(rng.choice([1.0, 2.0]))))
    raise ValueError(f"unknown family {family!r}")


def random_field(n: int, rng, polytopes: bool = False) -> ScalarField:
    """Even field, or a shifted Gaussian (non-even), with a random amplitude."""
    if rng.random() < 0.3:
        cov = np.diag(rng.uniform(0.5, 1.5, n) ** 2)
        f = make_gaussian_cov(cov, center=rng.uniform(-0.8, 0.8, n))
    else:
        f = random_even_field(n, rng, polytopes=polytopes)
    return scale_field(f, float(rng.uniform(0.5, 2.0)))


# --------------------------------------------------------------------------
# cube sections and the high-dimensional cube/ball comparison
# --------------------------------------------------------------------------

def counterexample_ball_radius(n: int) -> float:
    """Radius r with omega_{n-1} r^{n-1} = sqrt(2)."""
    return math.exp((0.5 * math.log(2.0) - math.log(ball_volume(n - 1))) / (n - 1))


def cube_section_exact(u) -> float:
    """V_{n-1}(Q cap u^perp) for the unit cube Q = [-1/2, 1/2]^n.

    The section equals the density at 0 of sum_j u_j X_j with X_j uniform on
    [-1/2, 1/2], a piecewise polynomial (B-spline) summed over the 2^k
    vertices of the box of nonzero components.  Use for k <= 8.
    """
    a = np.abs(np.asarray(u, dtype=float))
    a = a[a > 1e-15] / np.linalg.norm(a)
    k = a.size
    if k > 12:
        raise ValueError("exact formula is limited to few nonzero components")
    total = 0.0
    half = 0.5 * a.sum()
    for eps in itertools.product((0, 1), repeat=k):
        x = half - float(np.dot(eps, a))
        if k == 1:
            term = 1.0 if x > 0 else (0.5 if x == 0 else 0.0)
        else:
            term = max(x, 0.0) ** (k - 1)
        total += (-1) ** sum(eps) * term
    return total / (math.factorial(k - 1) * float(np.prod(a)))


def _fourier_nodes(T: float, panels: int, order: int = 12) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, T, panels + 1)
    h = np.diff(edges)[:, None]
    s = (edges[:-1, None] + 0.5 * h * (x + 1.0)).reshape(-1)
    ww = (0.5 * h * w).reshape(-1)
    return s, ww


def cube_section(U, T: float = 400.0) -> tuple[np.ndarray, np.ndarray]:
    """Central sections of the unit cube for rows of U, with error bounds.

    A(0) = (1/pi) * integral_0^inf prod_j sinc(u_j t / 2) dt (Fourier slice of
    the section function).  The integral is truncated at T; the tail is bounded
    by prod_j min(1, 2 / (|u_j| t)).  Directions with at most 8 nonzero
    components, or with a tail bound above 1e-9, use the exact spline sum.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    A = np.abs(U)
    s, w = _fourier_nodes(T, int(T))
    vals = sinc_product_quadrature(A, s, w) / math.pi
    errs = np.empty(len(U))
    for i, a in enumerate(A):
        big = a[a > 2.0 / T]
        m = big.size
        tail = math.prod(2.0 / big) * T ** (1 - m) / (m - 1) if m >= 2 else math.inf
        errs[i] = tail / math.pi
        if np.count_nonzero(a > 1e-15) <= 8 or errs[i] > 1e-9:
            vals[i] = cube_section_exact(a)
            errs[i] = 1e-13
    return vals, errs


def cube_section_monte_carlo(u, samples: int = 200_000, seed: int = 0) -> tuple[float, float]:
    """Hit-or-miss estimate of V_{n-1}(Q cap u^perp) on the disk of radius sqrt(n)/2 in u^perp."""
    from .quadrature import orthonormal_complement

    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    n = u.size
    rng = np.random.default_rng(seed)
    R = math.sqrt(n) / 2.0
    d = rng.standard_normal((samples, n - 1))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    pts = d * (R * rng.random(samples) ** (1.0 / (n - 1)))[:, None]
    x = pts @ orthonormal_complement(u).T
    hit = np.all(np.abs(x) <= 0.5, axis=1)
    area = ball_volume(n - 1) * R ** (n - 1)
    p = hit.mean()
    return float(area * p), float(area * math.sqrt(p * (1 - p) / samples))


def bp_counterexample_cube_ball(n: int = 10, directions: int = 600, seed: int = 0,
                                cfg: QuadratureConfig | None = None) -> tuple[BPVerdict, dict]:
    """Unit cube K versus the ball L whose central sections all equal sqrt(2).

    Cube sections never exceed sqrt(2), so K has the smaller sections on every
    sampled direction, yet V(L) < 1 = V(K) for n >= 10.
    """
    cfg = cfg or QuadratureConfig()
    if n < 10:
        raise ValueError("construction valid only for n >= 10")
    r = counterexample_ball_radius(n)
    dirs = np.concatenate([
        np.eye(n)[:1],
        (np.eye(n)[0] + np.eye(n)[1])[None] / math.sqrt(2.0),
        quasi_random_directions(n, max(directions, 500) - 2, seed=seed),
    ])
    sec, sec_err = cube_section(dirs)
    ball_sec = ball_volume(n - 1) * r ** (n - 1)
    slack = 1e-3
    domination = bool(np.all(sec <= ball_sec + slack))
    vol = volume(ball(n, r), cfg)
    v_exact = ball_volume(n) * r**n
    err = max(vol.error_estimate, abs(vol.value - v_exact))
    worst = int(np.argmax(sec))
    mass_ordered = bool(1.0 <= vol.value)
    summary = {
        "n": n, "radius": r, "ball_section": ball_sec, "ball_volume": vol.value, "ball_volume_exact": v_exact,
        "ball_volume_error": err, "cube_volume": 1.0, "directions": len(dirs), "max_cube_section": float(sec[worst]),
        "max_section_error": float(sec_err.max()), "margin": 1.0 - vol.value,
    }
    verdict = BPVerdict(domination, mass_ordered, True, True, True, dirs[worst].tolist(), float(sec[worst] / ball_sec),
                        summary)
    return verdict, summary


# --------------------------------------------------------------------------
# the even-symmetrization construction
# --------------------------------------------------------------------------

def demo_noneven_necessity(f: ScalarField, cfg: QuadratureConfig | None = None, directions: int = 32,
                           seed: int = 0) -> list[InequalityReport]:
    """For non-even f, g = eps * D f with eps = (1 + dJ(f,f)/dJ(Df,Df)) / 2 is
    even, has strictly smaller central sections (so I g < I f) and a strictly
    larger self dual mixed volume.

    f is first scaled down so that inf(-log f) > 1.
    """
    cfg = cfg or QuadratureConfig()
    n = f.dim
    if f.is_even or check_even(f) <= 1e-12 * f.sup_bound:
        raise ValueError("construction requires non-even input")
    inf_phi = -math.log(f.sup_bound)
    shift = 0.0 if inf_phi > 1.0 else 1.5 - inf_phi
    fb = scale_field(f, math.exp(-shift))
    D = dual_difference(fb)
    dff, dDD = dual_mixed(fb, fb, cfg), dual_mixed(D, D, cfg)
    eps = 0.5 * (1.0 + dff.value / dDD.value)
    g = scale_field(D, eps)
    dgg = dual_mixed(g, g, cfg)
    dirs = quasi_random_directions(n, directions, seed=seed)
    Af, ef = grid_sections(fb, dirs, cfg)
    Ag, eg = grid_sections(g, dirs, cfg)
    rel = cfg.tol(n)
    ratio = Ag / Af
    ratio_err = float(np.max((ef + eg) / Af))
    meta = {"eps": eps, "shift": shift, "selfdual_f": dff.value, "selfdual_Df": dDD.value, "selfdual_g": dgg.value,
            "directions": directions, "seed": seed}
    return [
        InequalityReport("noneven-eps-below-one", eps, 1.0, 0.0, metadata=meta),
        InequalityReport("noneven-positive-selfdual", 0.0, dff.value - 5.0 * dff.error_estimate, 0.0, metadata=meta),
        # strictly smaller sections: max A_g/A_f plus its error stays below 1
        InequalityReport("noneven-smaller-sections", float(ratio.max()) + 5.0 * ratio_err, 1.0, 0.0, metadata=meta),
        InequalityReport("noneven-larger-selfdual", dff.value + 5.0 * (dff.error_estimate + dgg.error_estimate)
                         + rel * abs(dff.value), dgg.value, 0.0, metadata=meta),
    ]


# --------------------------------------------------------------------------
# suites
# --------------------------------------------------------------------------

SUITES = ("dual-minkowski", "busemann-intersection", "moments", "inclusion", "symmetrization", "bp-positive",
          "bp-negative")


def _rng(seed: int, suite: str, index: int):
    return np.random.default_rng([seed, SUITES.index(suite), index])


def _suite_dual_minkowski(seed, cfg, pairs=50, **_):
    out = []
    for i in range(pairs):
        rng = _rng(seed, "dual-minkowski", i)
        n = 2 + i % 2
        f, g = random_field(n, rng, polytopes=n == 2), random_field(n, rng, polytopes=n == 2)
        Jf, Jg = total_mass(f, cfg), total_mass(g, cfg)
        dff, dfg = dual_mixed(f, f, cfg), dual_mixed(f, g, cfg)
        errs = [dff.error_estimate, dfg.error_estimate, 3 * Jf.error_estimate, 3 * Jg.error_estimate]
        meta = {"seed": seed, "index": i, "n": n, "f": f.name, "g": g.name}
        tol = _tolerance(errs, abs(dfg.value), cfg.tol(n))
        out.append(InequalityReport(f"dual-minkowski[{i}]", dff.value + Jf.value * math.log(Jf.value / Jg.value),
                                    dfg.value, tol, metadata=meta))
        out.append(InequalityReport(f"dual-minkowski-linear[{i}]", dff.value + Jf.value - Jg.value, dfg.value, tol,
                                    metadata=meta))
    # equality cases f = a g
    for i, (n, a) in enumerate([(2, 0.5), (2, 2.0), (3, 0.5), (3, 2.0)]):
        rng = _rng(seed, "dual-minkowski", 1000 + i)
        g = random_even_field(n, rng)
        f = scale_field(g, a)
        Jf, Jg = total_mass(f, cfg), total_mass(g, cfg)
        dff, dfg = dual_mixed(f, f, cfg), dual_mixed(f, g, cfg)
        out.append(InequalityReport(f"dual-minkowski-equality[{i}]",
                                    dff.value + Jf.value * math.log(Jf.value / Jg.value), dfg.value,
                                    1e-4 * abs(dfg.value), equality_expected=True,
                                    metadata={"seed": seed, "n": n, "a": a, "g": g.name}))
    # geometric dual Minkowski inequality and its logarithmic corollary
    for i in range(10):
        rng = _rng(seed, "dual-minkowski", 2000 + i)
        n, p = 2 + i % 2, float(rng.choice([1.0, 2.0]))
        K, L = random_symmetric_body(n, rng, "ellipsoid"), random_symmetric_body(n, rng)
        V = dual_mixed_volume(K, L, p, cfg)
        VK, VL = volume(K, cfg), volume(L, cfg)
        tol = _tolerance([V.error_estimate, VK.error_estimate, VL.error_estimate], V.value, cfg.tol(n))
        meta = {"seed": seed, "n": n, "p": p}
        out.append(InequalityReport(f"dual-minkowski-bodies[{i}]",
                                    VK.value ** ((n + p) / n) * VL.value ** (-p / n), V.value, tol, metadata=meta))
        out.append(InequalityReport(f"dual-minkowski-bodies-log[{i}]",
                                    VK.value + VK.value * math.log((VK.value / VL.value) ** (p / n)), V.value, tol,
                                    metadata=meta))
    for i, n in enumerate((2, 3)):
        K = random_symmetric_body(n, _rng(seed, "dual-minkowski", 3000 + i), "ellipsoid")
        L = star_body(n, lambda u, K=K: 1.7 * K.radial(u), is_even=True)
        V, VK, VL = dual_mixed_volume(K, L, 1.0, cfg), volume(K, cfg), volume(L, cfg)
        out.append(InequalityReport(f"dual-minkowski-bodies-equality[{i}]",
                                    VK.value ** ((n + 1) / n) * VL.value ** (-1 / n), V.value,
                                    cfg.tol(n) * V.value, equality_expected=True, metadata={"seed": seed, "n": n}))
    # convexity of t -> log J(f^(1-t) g^t)
    ts = np.linspace(0.0, 1.0, 11)
    for i in range(4):
        rng = _rng(seed, "dual-minkowski", 4000 + i)
        n = 2 + i % 2
        f, g = random_even_field(n, rng), random_even_field(n, rng)
        ups = log_mass_interpolation(f, g, ts, cfg)
        d2 = ups[2:] - 2 * ups[1:-1] + ups[:-2]
        out.append(InequalityReport(f"log-mass-convexity[{i}]", float(-d2.min()), 0.0, 1e-6,
                                    metadata={"seed": seed, "n": n, "curve": ups.tolist()}))
    return out


def _random_star_2d(rng) -> StarBody:
    c = rng.uniform(-0.25, 0.25, 3)
    return star_body(2, lambda u: 1.0 + c[0] * np.cos(2 * np.arctan2(u[:, 1], u[:, 0]))
                     + c[1] * np.cos(4 * np.arctan2(u[:, 1], u[:, 0])) + c[2] * np.sin(6 * np.arctan2(u[:, 1], u[:, 0])),
                     is_even=True, name="star2d")


def _suite_busemann(seed, cfg, fields=30, **_):
    out = []
    for i in range(fields):
        rng = _rng(seed, "busemann-intersection", i)
        n = 2 + i % 2
        f = random_field(n, rng)
        lhs = intersection_mass(f, cfg)
        J = total_mass(f, cfg)
        rhs = busemann_constant(n) * f.sup_bound * J.value ** (n - 1)
        tol = _tolerance([lhs.error_estimate, (n - 1) * J.error_estimate / J.value * rhs], rhs, cfg.tol(n))
        out.append(InequalityReport(f"busemann-intersection[{i}]", lhs.value, rhs, tol,
                                    metadata={"seed": seed, "index": i, "n": n, "f": f.name}))
    # equality: characteristic functions of the ball and of an ellipsoid (n=3), of a star body (n=2)
    chi_b = make_characteristic(ball(3))
    pinned = math.gamma(4) * ball_volume(3) * ball_volume(2) ** 3
    out.append(InequalityReport("busemann-ball-pinned", intersection_mass(chi_b, cfg).value, pinned, 1e-3 * pinned,
                                equality_expected=True, metadata={"n": 3, "closed_form": "Gamma(n+1) w_n w_{n-1}^n"}))
    E = random_symmetric_body(3, _rng(seed, "busemann-intersection", 1000), "ellipsoid")
    S = _random_star_2d(_rng(seed, "busemann-intersection", 1001))
    for name, K in (("busemann-ellipsoid-equality", E), ("busemann-star2d-equality", S)):
        chi = make_characteristic(K)
        n = K.dim
        lhs = intersection_mass(chi, cfg).value
        rhs = busemann_constant(n) * volume(K, cfg).value ** (n - 1)
        out.append(InequalityReport(name, lhs, rhs, 1e-3 * rhs, equality_expected=True, metadata={"seed": seed, "n": n}))
    return out


def _random_profile(rng):
    """Bounded integrable 1-D profile with known sup, support radius and break points."""
    kind = int(rng.integers(3))
    A = float(rng.uniform(0.5, 3.0))
    if kind == 0:
        b, c = rng.uniform(0.5, 2.0), rng.uniform(0.7, 2.5)
        R = (math.log(1e14) / b) ** (1 / c)
        return (lambda r: A * np.exp(-b * r**c)), A, R, (), f"stretched_exp(b={b:.3g},c={c:.3g})"
    if kind == 1:
        m, s = rng.uniform(0.0, 2.0), rng.uniform(0.2, 1.0)
        R = m + s * math.sqrt(2 * math.log(1e14))
        return (lambda r: A * np.exp(-((r - m) ** 2) / (2 * s * s))), A, R, (m,), f"bump(m={m:.3g},s={s:.3g})"
    lo, hi = sorted(rng.uniform(0.0, 3.0, 2))
    return (lambda r: np.where((r >= lo) & (r <= hi), A, 0.0)), A, hi, (lo,), f"box({lo:.3g},{hi:.3g})"


_MOMENT_PS = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)


def _suite_moments(seed, cfg, profiles=20, **_):
    out = []
    for i in range(profiles):
        prof, sup, R, brk, name = _random_profile(_rng(seed, "moments", i))
        F = np.array([moment_radius(prof, p, sup, R, cfg, brk) for p in _MOMENT_PS])
        out.append(InequalityReport(f"moments[{i}]", float(np.max(F[:-1] - F[1:])), 0.0, 1e-9 * F.max(),
                                    metadata={"seed": seed, "profile": name, "F": F.tolist()}))
    for i, c in enumerate((0.7, 1.0, 2.5)):
        F = np.array([moment_radius(lambda r, c=c: np.where(r <= c, 3.0, 0.0), p, 3.0, c, cfg) for p in _MOMENT_PS])
        out.append(InequalityReport(f"moments-equality[{i}]", float(np.ptp(F)), 0.0, 1e-6, equality_expected=True,
                                    metadata={"c": c, "F": F.tolist()}))
    return out


_INCLUSION_PS = (0.5, 1.0, 2.0, 3.0)


def _scaled_radii(f: ScalarField, dirs: np.ndarray, cfg) -> np.ndarray:
    ratio = f.sup_bound / f.value_at_origin
    return np.array([ratio ** (-1.0 / p) * ball_body(f, p, cfg).radial(dirs) for p in _INCLUSION_PS])


def _suite_inclusion(seed, cfg, fields=20, **_):
    out = []
    for i in range(fields):
        rng = _rng(seed, "inclusion", i)
        n = 2 + i % 2
        f = random_field(n, rng)
        dirs = quasi_random_directions(n, 24, seed=seed + i)
        rad = _scaled_radii(f, dirs, cfg)
        viol = float(np.max(rad[:-1] - rad[1:]))
        out.append(InequalityReport(f"inclusion[{i}]", viol, 0.0, 1e-7 * rad.max(),
                                    metadata={"seed": seed, "index": i, "n": n, "f": f.name}))
    for i, n in enumerate((2, 3)):
        K = random_symmetric_body(n, _rng(seed, "inclusion", 1000 + i))
        chi = scale_field(make_characteristic(K), 2.0)
        rad = _scaled_radii(chi, quasi_random_directions(n, 24, seed=seed), cfg)
        out.append(InequalityReport(f"inclusion-equality[{i}]", float(np.max(np.ptp(rad, axis=0))), 0.0, 1e-6,
                                    equality_expected=True, metadata={"seed": seed, "n": n}))
    return out


def shifted_gaussian(n: int, shift: float = 1.0, sigma: float = 1.0) -> ScalarField:
    c = np.zeros(n)
    c[0] = shift
    return make_gaussian(n, sigma, center=c)


def _suite_symmetrization(seed, cfg, **_):
    out = []
    for i, n in enumerate((2, 3)):
        rng = _rng(seed, "symmetrization", i)
        f = make_gaussian_cov(np.diag(rng.uniform(0.6, 1.4, n) ** 2), center=rng.uniform(0.5, 1.0, n))
        D = DualDifferenceField(f)
        x = rng.standard_normal((10, n)) * 2.0
        dev = float(np.max(np.abs(intersection_function(D, x, cfg) - intersection_function(f, x, cfg))))
        out.append(InequalityReport(f"symmetrization-intersection[{i}]", dev, 0.0, 1e-6, metadata={"seed": seed, "n": n}))
        dff, dDD = dual_mixed(f, f, cfg), dual_mixed(D, D, cfg)
        err = dff.error_estimate + dDD.error_estimate
        out.append(InequalityReport(f"symmetrization-selfdual[{i}]", dff.value + 10.0 * err, dDD.value, 0.0,
                                    metadata={"seed": seed, "n": n, "gap": dDD.value - dff.value, "err": err}))
        for rep in demo_noneven_necessity(scale_field(f, math.exp(-2.0)), cfg, seed=seed + i):
            rep.name = f"{rep.name}[{i}]"
            out.append(rep)
    return out


def dominating_pair(n: int, rng, dirs: np.ndarray, cfg) -> tuple:
    """Independent even fields f, g with g scaled so that A_f <= A_g on ``dirs``."""
    f, g = random_even_field(n, rng), random_even_field(n, rng)
    Af, ef = grid_sections(f, dirs, cfg)
    Ag, eg = grid_sections(g, dirs, cfg)
    s = float(np.max(Af / Ag)) * (1.0 + 10.0 * cfg.tol(n))
    return f, scale_field(g, s), ((Af, ef), (s * Ag, s * eg)), s


_BP_GRID_LEVEL = {2: 2, 3: 0, 4: 0}


def _suite_bp_positive(seed, cfg, pairs=50, dims=(2, 3, 4), **_):
    out = []
    for n in dims:
        grid = direction_grid(n, _BP_GRID_LEVEL.get(n, 0), seed=seed)
        for i in range(pairs):
            rng = _rng(seed, "bp-positive", 1000 * n + i)
            f, g, secs, s = dominating_pair(n, rng, grid.nodes, cfg)
            v = bp_check(f, g, grid, cfg, sections=secs)
            V = v.values
            meta = {"seed": seed, "n": n, "index": i, "f": f.name, "g": g.name, "domination": v.domination,
                    "directions": len(grid)}
            rel = cfg.tol(n)
            out.append(InequalityReport(f"bp-positive-mass[n={n},{i}]", V["J_f"], V["J_g"],
                                        _tolerance([V["J_err"]], max(V["J_f"], V["J_g"]), rel), metadata=meta))
            out.append(InequalityReport(f"bp-positive-selfdual[n={n},{i}]", V["selfdual_f"], V["selfdual_g"],
                                        _tolerance([V["selfdual_err"]], max(V["selfdual_f"], V["selfdual_g"]), rel),
                                        metadata=meta))
            c = V["entropy_scale"]
            out.append(InequalityReport(f"bp-positive-entropy[n={n},{i}]", c * V["Ent_g"], c * V["Ent_f"],
                                        c * _tolerance([V["Ent_err"]], max(abs(V["Ent_f"]), abs(V["Ent_g"])), rel),
                                        metadata=meta))
    return out


def _suite_bp_negative(seed, cfg, **_):
    v, s = bp_counterexample_cube_ball(10, 600, seed=seed, cfg=cfg)
    lhs = s["ball_volume"] + 10.0 * s["ball_volume_error"]
    if not v.domination:
        lhs = math.inf
    return [InequalityReport("bp-negative[n=10]", lhs, 1.0, 0.0,
                             metadata={"domination": v.domination, "mass_ordered": v.mass_ordered, **s})]


_RUNNERS = {
    "dual-minkowski": _suite_dual_minkowski,
    "busemann-intersection": _suite_busemann,
    "moments": _suite_moments,
    "inclusion": _suite_inclusion,
    "symmetrization": _suite_symmetrization,
    "bp-positive": _suite_bp_positive,
    "bp-negative": _suite_bp_negative,
}


def run_suite(name: str, seed: int = 0, cfg: QuadratureConfig | None = None, **options) -> list[InequalityReport]:
    """Run a named suite (or "all") and return its reports in a fixed order."""
    cfg = cfg or QuadratureConfig(seed=seed)
    if name == "all":
        return [r for s in SUITES for r in _RUNNERS[s](seed, cfg, **options.get(s, {}))]
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; expected one of {', '.join(SUITES + ('all',))}")
    return _RUNNERS[name](seed, cfg, **options)
