"""Intersection functions, Ball bodies, intersection bodies and the spherical
Radon transform (with its inversion on S^2 by spherical harmonics)."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import eval_legendre, gammaln, sph_harm_y

from .config import TRUNCATION_EPS, IntegralResult, QuadratureConfig
from .fields import CharField, LinearField, ScalarField, check_even, dual_difference
from .geometry import StarBody
from .quadrature import (
    ball_volume,
    integrate_great_subsphere,
    integrate_hyperplane,
    integrate_radial,
    integrate_sphere,
    quasi_random_directions,
    ray_integrate,
)
from .reports import InequalityReport

__all__ = [
    "section_function", "intersection_function", "IntersectionFunctionField", "intersection_mass",
    "ball_body", "intersection_body", "if_via_ball_body", "dual_difference", "gl_transform_check",
    "moment_radius", "SphericalFunction", "spherical_radon", "spherical_radon_inverse_n3",
    "is_intersection_function_n3", "MembershipVerdict", "busemann_constant",
]

_DECAY = math.log(1.0 / TRUNCATION_EPS)


def _unit_rows(u) -> np.ndarray:
    u = np.atleast_2d(np.asarray(u, dtype=float))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def _line_key(u: np.ndarray) -> bytes:
    """Key shared by u and -u (they define the same hyperplane)."""
    v = np.round(u, 13) + 0.0
    nz = np.flatnonzero(v)
    if nz.size and v[nz[0]] < 0:
        v = -v + 0.0
    return v.tobytes()


# --------------------------------------------------------------------------
# intersection functions
# --------------------------------------------------------------------------

def section_function(f: ScalarField, dirs, cfg: QuadratureConfig | None = None,
                     tol: float | None = None) -> np.ndarray:
    """Central sections A_{f,u}(0) for each row of ``dirs``."""
    cfg = cfg or QuadratureConfig()
    return np.array([integrate_hyperplane(f, u, 0.0, cfg, tol).value for u in _unit_rows(dirs)])


class IntersectionFunctionField(ScalarField):
    """The field x -> exp(-|x| / A_{f, x/|x|}(0)), with sections memoized per line."""

    def __init__(self, f: ScalarField, cfg: QuadratureConfig | None = None, tol: float | None = None):
        if f.dim < 2:
            raise ValueError("intersection functions need n >= 2")
        self.base = f
        self.cfg = cfg or QuadratureConfig()
        self.tol = tol
        self.noise_floor = self.cfg.abs_tol
        self._memo: dict[bytes, float] = {}
        self._lock = threading.Lock()
        probe = np.concatenate([np.eye(f.dim), quasi_random_directions(f.dim, 16, seed=11)])
        amax = float(np.max(self.sections(probe)))
        super().__init__(f.dim, support_radius=max(2.0 * _DECAY * amax, 1e-12), sup_bound=1.0, is_even=True,
                         name=f"I({f.name})")

    def sections(self, dirs) -> np.ndarray:
        u = _unit_rows(dirs)
        keys = [_line_key(row) for row in u]
        with self._lock:
            missing = {k: i for i, k in enumerate(keys) if k not in self._memo}
        for k, i in missing.items():
            val = integrate_hyperplane(self.base, u[i], 0.0, self.cfg, self.tol).value
            with self._lock:
                self._memo.setdefault(k, val)
        with self._lock:
            return np.array([self._memo[k] for k in keys])

    def _exponent(self, x: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(x, axis=1)
        out = np.zeros(r.shape)
        nz = r > 0
        if np.any(nz):
            A = self.sections(x[nz] / r[nz, None])
            with np.errstate(divide="ignore"):
                out[nz] = np.where(A > self.noise_floor, r[nz] / np.where(A > 0, A, 1.0), np.inf)
        return out

    def _eval(self, x):
        return np.exp(-self._exponent(x))

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return self._exponent(x.reshape(-1, self.dim)).reshape(x.shape[:-1])

    def rays(self, dirs, origin=None):
        if origin is not None and np.any(origin):
            return super().rays(dirs, origin)
        A = self.sections(dirs)
        return (_DECAY * np.maximum(A, 0.0) * 1.5 + 1e-300)[:, None]

    def along_rays(self, dirs, r, origin=None, fn=None):
        if fn is not None or (origin is not None and np.any(origin)):
            return super().along_rays(dirs, r, origin, fn)
        A = self.sections(dirs)
        with np.errstate(divide="ignore"):
            rate = np.where(A > self.noise_floor, 1.0 / np.where(A > 0, A, 1.0), np.inf)
            return np.where(r == 0, 1.0, np.exp(-r * rate[:, None]))


def intersection_function(f: ScalarField, x, cfg: QuadratureConfig | None = None,
                          tol: float | None = None) -> np.ndarray | float:
    """I f(x) = exp(-|x| / A_{f, x/|x|}(0)), with I f(0) = 1 and 0 where the
    section falls below the absolute noise floor."""
    cfg = cfg or QuadratureConfig()
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, f.dim)
    r = np.linalg.norm(flat, axis=1)
    out = np.ones(r.shape)
    for i in np.flatnonzero(r > 0):
        A = integrate_hyperplane(f, flat[i] / r[i], 0.0, cfg, tol).value
        out[i] = math.exp(-r[i] / A) if A > cfg.abs_tol else 0.0
    return float(out[0]) if x.ndim == 1 else out.reshape(x.shape[:-1])


def intersection_mass(f: ScalarField, cfg: QuadratureConfig | None = None, tol: float | None = None,
                      field: IntersectionFunctionField | None = None) -> IntegralResult:
    """J(I f) = Gamma(n) * integral over S^{n-1} of A_{f,u}(0)^n (the radial
    integral of exp(-r/A) r^{n-1} is done in closed form)."""
    cfg = cfg or QuadratureConfig()
    F = field or IntersectionFunctionField(f, cfg, tol)
    n = f.dim
    res = integrate_sphere(n, lambda u: F.sections(u) ** n, cfg, tol)
    g = math.gamma(n)
    res.value *= g
    res.error_estimate *= g
    return res


def busemann_constant(n: int) -> float:
    """Gamma(n+1) * omega_{n-1}^n / omega_n^{n-2}."""
    return math.exp(gammaln(n + 1) + n * math.log(ball_volume(n - 1)) - (n - 2) * math.log(ball_volume(n)))


# --------------------------------------------------------------------------
# Ball bodies and intersection bodies
# --------------------------------------------------------------------------

def ball_body(f: ScalarField, p: float, cfg: QuadratureConfig | None = None, tol: float | None = None) -> StarBody:
    """K_p(f) with radial ((p / f(0)) * integral of r^{p-1} f(r u) dr)^{1/p}."""
    cfg = cfg or QuadratureConfig()
    if not p > 0:
        raise ValueError("p must be positive")
    f0 = f.value_at_origin
    if not f0 > 0:
        raise ValueError("Ball body undefined: f(0) <= 0")
    rtol = (cfg.tol(f.dim) if tol is None else tol) / 10.0

    def radial(u):
        brk = np.atleast_2d(f.rays(u))
        rr = ray_integrate(lambda idx, r: f.along_rays(u[idx], r), brk, p - 1.0, rtol, cfg.abs_tol * 1e-3,
                           cfg.budget)
        return (p / f0 * rr.values) ** (1.0 / p)

    return StarBody(f.dim, radial, is_even=f.is_even, name=f"K_{p:g}({f.name})", memoize=True)


def intersection_body(K: StarBody, cfg: QuadratureConfig | None = None, method: str = "radon",
                      tol: float | None = None) -> StarBody:
    """IK with rho_{IK}(u) = V_{n-1}(K cap u^perp).

    ``method="radon"`` integrates rho_K^{n-1}/(n-1) over the great subsphere
    u^perp; ``method="section"`` integrates the indicator of K over the
    hyperplane u^perp in polar coordinates.
    """
    cfg = cfg or QuadratureConfig()
    n = K.dim
    if n < 2:
        raise ValueError("intersection bodies need n >= 2")
    if method not in ("radon", "section"):
        raise ValueError("method must be 'radon' or 'section'")
    chi = CharField(K) if method == "section" else None

    def radial(u):
        out = np.empty(len(u))
        for i, v in enumerate(u):
            if chi is not None:
                out[i] = integrate_hyperplane(chi, v, 0.0, cfg, tol).value
            else:
                res = integrate_great_subsphere(lambda w: K.radial(w) ** (n - 1), v, cfg, tol)
                out[i] = res.value / (n - 1)
        return out

    return StarBody(n, radial, is_even=True, name=f"I({K.name})", memoize=True)


def if_via_ball_body(f: ScalarField, x, cfg: QuadratureConfig | None = None, tol: float | None = None,
                     body: StarBody | None = None) -> np.ndarray | float:
    """exp(-|x|_{I K_{n-1}(f)} / f(0)); pass ``body`` to reuse a built I K_{n-1}(f)."""
    cfg = cfg or QuadratureConfig()
    n = f.dim
    if body is None:
        body = intersection_body(ball_body(f, n - 1, cfg, tol), cfg, "radon", tol)
    x = np.asarray(x, dtype=float)
    out = np.exp(-body.norm(x.reshape(-1, n)) / f.value_at_origin)
    return float(out[0]) if x.ndim == 1 else out.reshape(x.shape[:-1])


def gl_transform_check(f: ScalarField, T, sample_points, cfg: QuadratureConfig | None = None,
                       tol: float | None = None) -> InequalityReport:
    """Compare I(f o T)(x) with I f(|det T| T^{-t} x) on the sample.

    The report's lhs is the largest absolute deviation; it passes when that
    stays within 5 * rel_tol.
    """
    cfg = cfg or QuadratureConfig()
    T = np.asarray(T, dtype=float)
    if abs(np.linalg.det(T)) < 1e-12 or not np.isfinite(np.linalg.cond(T)):
        raise ValueError("singular matrix")
    x = np.atleast_2d(np.asarray(sample_points, dtype=float))
    lhs = intersection_function(LinearField(f, T), x, cfg, tol)
    y = abs(np.linalg.det(T)) * x @ np.linalg.inv(T)  # rows of |det T| T^{-t} x
    rhs = intersection_function(f, y, cfg, tol)
    dev = float(np.max(np.abs(np.atleast_1d(lhs) - np.atleast_1d(rhs))))
    return InequalityReport("gl-equivariance", dev, 0.0, 5.0 * cfg.tol(f.dim),
                            metadata={"points": len(x), "cond": float(np.linalg.cond(T))})


def moment_radius(profile: Callable[[np.ndarray], np.ndarray], p: float, sup: float, radius: float,
                  cfg: QuadratureConfig | None = None, breaks=()) -> float:
    """((p / sup) * integral_0^radius r^{p-1} profile(r) dr)^{1/p}."""
    cfg = cfg or QuadratureConfig()
    if p >= 1:
        res = integrate_radial(lambda r: r ** (p - 1.0) * profile(r), cfg, radius=radius, breaks=breaks,
                               tol=1e-10)
        val = res.value
    else:
        # r = s^{1/p} removes the r^{p-1} endpoint singularity
        res = integrate_radial(lambda s: profile(s ** (1.0 / p)) / p, cfg, radius=radius**p,
                               breaks=[b**p for b in breaks], tol=1e-10)
        val = res.value
    return (p / sup * val) ** (1.0 / p)


# --------------------------------------------------------------------------
# spherical functions and the spherical Radon transform
# --------------------------------------------------------------------------

def _sph_angles(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    theta = np.arccos(np.clip(u[:, 2], -1.0, 1.0))
    phi = np.arctan2(u[:, 1], u[:, 0])
    return theta, phi


def real_harmonics(lmax: int, u) -> np.ndarray:
    """Orthonormal real spherical harmonics on S^2, column l*l + l + m."""
    u = _unit_rows(u)
    theta, phi = _sph_angles(u)
    out = np.empty((len(u), (lmax + 1) ** 2))
    for l in range(lmax + 1):
        for m in range(0, l + 1):
            Y = sph_harm_y(l, m, theta, phi)
            if m == 0:
                out[:, l * l + l] = Y.real
            else:
                out[:, l * l + l + m] = math.sqrt(2.0) * Y.real
                out[:, l * l + l - m] = math.sqrt(2.0) * Y.imag
    return out


def analysis_grid(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre x uniform grid on S^2, exact for polynomials of degree < 2*order."""
    z, wz = np.polynomial.legendre.leggauss(order)
    nphi = 2 * order
    ph = (np.arange(nphi) + 0.5) * 2.0 * np.pi / nphi
    s = np.sqrt(1.0 - z**2)
    nodes = np.stack([np.outer(s, np.cos(ph)), np.outer(s, np.sin(ph)), np.repeat(z[:, None], nphi, 1)], -1)
    w = np.outer(wz, np.full(nphi, 2.0 * np.pi / nphi))
    return nodes.reshape(-1, 3), w.reshape(-1)


@dataclass
class SphericalFunction:
    """Function on S^{n-1} as an oracle, optionally with S^2 harmonic coefficients.

    With ``coeffs`` set (n = 3) the function is the finite expansion; the
    oracle, when also given, is the source the coefficients were fitted to,
    and ``truncation_error`` records the relative L2 norm of the remainder.
    """

    dim: int
    func: Callable[[np.ndarray], np.ndarray] | None = None
    coeffs: np.ndarray | None = None
    lmax: int | None = None
    truncation_error: float = 0.0
    name: str = "h"

    def __post_init__(self):
        if self.func is None and self.coeffs is None:
            raise ValueError("spherical function needs an oracle or coefficients")
        if self.coeffs is not None:
            if self.dim != 3:
                raise ValueError("harmonic coefficients are supported on S^2 only")
            self.coeffs = np.asarray(self.coeffs, dtype=float)
            L = int(round(math.sqrt(self.coeffs.size))) - 1
            if (L + 1) ** 2 != self.coeffs.size:
                raise ValueError("coefficient vector length must be (lmax+1)^2")
            self.lmax = L

    def __call__(self, u) -> np.ndarray:
        u = _unit_rows(u)
        if self.coeffs is not None:
            return real_harmonics(self.lmax, u) @ self.coeffs
        return np.asarray(self.func(u), dtype=float).reshape(-1)

    def oracle(self, u) -> np.ndarray:
        return np.asarray((self.func or self)(_unit_rows(u)), dtype=float).reshape(-1)

    def tabulate(self, nodes) -> np.ndarray:
        return self(nodes)

    @classmethod
    def fit(cls, func, lmax: int = 16, order: int | None = None, name: str = "h") -> "SphericalFunction":
        """Project an oracle on S^2 onto real harmonics of degree <= lmax."""
        order = order or max(2 * lmax + 2, 40)
        nodes, w = analysis_grid(order)
        vals = np.asarray(func(nodes), dtype=float).reshape(-1)
        Y = real_harmonics(lmax, nodes)
        c = Y.T @ (w * vals)
        total = float(w @ vals**2)
        # direct remainder: total - |c|^2 would lose half the digits to cancellation
        rest = float(w @ (vals - Y @ c) ** 2)
        err = math.sqrt(rest / total) if total > 0 else 0.0
        return cls(3, func, c, lmax, err, name)

    def odd_fraction(self) -> float:
        """Relative L2 norm of the odd-degree part of the expansion."""
        c = self.coeffs
        deg = np.repeat(np.arange(self.lmax + 1), 2 * np.arange(self.lmax + 1) + 1)
        tot = float(c @ c)
        return math.sqrt(float(c[deg % 2 == 1] @ c[deg % 2 == 1]) / tot) if tot > 0 else 0.0


def spherical_radon(h, u, cfg: QuadratureConfig | None = None, tol: float | None = None) -> float:
    """Integral of ``h`` over the great subsphere S^{n-1} cap u^perp."""
    u = np.asarray(u, dtype=float)
    if u.size < 2:
        raise ValueError("spherical Radon transform needs n >= 2")
    return integrate_great_subsphere(h, u / np.linalg.norm(u), cfg, tol).value


def radon_multiplier(l: int) -> float:
    """Eigenvalue of the spherical Radon transform on degree-l harmonics on S^2."""
    return 2.0 * math.pi * float(eval_legendre(l, 0.0))


_LMAX_CAP = 64


def spherical_radon_inverse_n3(g, lmax: int = 16, odd_tol: float = 1e-8) -> tuple[SphericalFunction, float]:
    """Even pre-image h with R h = g (up to degree lmax) and the truncation residual of g."""
    if not 0 <= lmax <= _LMAX_CAP:
        raise ValueError(f"lmax must lie in [0, {_LMAX_CAP}]")
    if isinstance(g, SphericalFunction):
        if g.dim != 3:
            raise ValueError("inversion is implemented on S^2 only")
        sg = g if g.coeffs is not None and g.lmax >= lmax else SphericalFunction.fit(g.oracle, lmax)
    else:
        sg = SphericalFunction.fit(g, lmax)
    if sg.odd_fraction() > odd_tol:
        raise ValueError("not even: the odd harmonic part exceeds tolerance")
    c = sg.coeffs[: (lmax + 1) ** 2]
    h = np.zeros_like(c)
    for l in range(0, lmax + 1, 2):
        sl = slice(l * l, (l + 1) ** 2)
        h[sl] = c[sl] / radon_multiplier(l)
    return SphericalFunction(3, None, h, lmax, sg.truncation_error, name="radon_preimage"), sg.truncation_error


@dataclass
class MembershipVerdict:
    verdict: str
    min_preimage: float
    normalized_min: float
    residual: float
    coefficients: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "min_preimage": self.min_preimage, "normalized_min": self.normalized_min,
                "residual": self.residual}


def is_intersection_function_n3(f: ScalarField, lmax: int = 16, tol: float = 1e-3,
                                cfg: QuadratureConfig | None = None) -> MembershipVerdict:
    """Decide whether f is an intersection function on R^3.

    K_2(f) is built and its radial function inverted under the spherical
    Radon transform.  The verdict is "yes" when the pre-image stays above
    tol (relative to its mean), "no" when it dips below -tol, and
    "inconclusive" in between.
    """
    cfg = cfg or QuadratureConfig()
    if f.dim != 3:
        raise ValueError("membership testing is implemented for n = 3")
    if not f.value_at_origin > 0:
        raise ValueError("Ball body undefined: f(0) <= 0")
    if check_even(f) > 1e-9 * max(f.sup_bound, 1.0):
        raise ValueError("membership testing needs an even field")
    K = ball_body(f, 2, cfg)
    h, resid = spherical_radon_inverse_n3(SphericalFunction(3, K.radial, name="rho_K2"), lmax)
    nodes, _ = analysis_grid(2 * lmax + 8)
    nodes = np.concatenate([nodes, np.eye(3), -np.eye(3)])
    vals = h(nodes)
    mean = h.coeffs[0] * real_harmonics(0, nodes[:1])[0, 0]
    mn = float(vals.min())
    norm = mn / mean if mean > 0 else -math.inf
    verdict = "yes" if norm > tol else ("no" if norm < -tol else "inconclusive")
    table = []
    for l in range(0, lmax + 1, 2):
        for m in range(-l, l + 1):
            j = l * l + l + m
            table.append((l, m, float(h.coeffs[j] * radon_multiplier(l)), float(h.coeffs[j])))
    return MembershipVerdict(verdict, mn, float(norm), float(resid), table)


def negative_harmonic_fixture(amplitude: float = 0.5, degree: int = 6) -> ScalarField:
    """Indicator of the star body rho(u) = 1 + amplitude * P_degree(u_3) in R^3.

    K_2 of an indicator is the body itself.  The spherical Radon multiplier
    of degree l is 2 pi P_l(0), so inversion divides the injected harmonic
    by P_l(0) = -5/16 for l = 6: the pre-image is proportional to
    1 - 3.2 * amplitude * P_6(u_3) and negative at the poles once
    amplitude > 5/16.  Used as the "no" fixture of the membership test.
    """
    if degree % 2:
        raise ValueError("degree must be even")
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    lo = float(np.min(eval_legendre(degree, np.linspace(-1.0, 1.0, 2001))))
    if 1.0 + amplitude * lo <= 0:
        raise ValueError("amplitude too large: radial function would not stay positive")
    K = StarBody(3, lambda u: 1.0 + amplitude * eval_legendre(degree, u[:, 2]), is_even=True,
                 name=f"star(1+{amplitude:g}P{degree})")
    return CharField(K)
