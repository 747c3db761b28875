"""Scalar functionals of fields: total mass, entropy, sections, marginals,
Radon transform and the functional dual mixed volume (integral and limit
routes)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import IntegralResult, QuadratureConfig
from .fields import ScalarField, SumField
from .quadrature import (
    integrate_hyperplane,
    integrate_space,
    polar_integral,
    ray_integrate,
    space_rule,
)


class DegenerateMassError(ValueError):
    pass


@dataclass(frozen=True)
class SubspaceFrame:
    """Orthonormal basis of F in G(n, k) together with a basis of F^perp."""

    basis: np.ndarray
    completion: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def from_vectors(cls, vectors) -> "SubspaceFrame":
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        k, n = V.shape
        if not 1 <= k <= n - 1:
            raise ValueError("subspace dimension k must satisfy 1 <= k <= n-1")
        Qm, R = np.linalg.qr(V.T, mode="complete")
        if np.min(np.abs(np.diag(R[:k, :k]))) < 1e-12:
            raise ValueError("spanning vectors are linearly dependent")
        # keep the first basis vector pointing like the first input
        signs = np.sign(np.diag(R[:k, :k]))
        basis = (Qm[:, :k] * signs).T
        return cls(basis, Qm[:, k:].T)

    def gram_error(self) -> float:
        full = np.concatenate([self.basis, self.completion])
        return float(np.max(np.abs(full @ full.T - np.eye(self.dim))))


# --------------------------------------------------------------------------
# mass and entropy
# --------------------------------------------------------------------------

def total_mass(f: ScalarField, cfg: QuadratureConfig | None = None, tol: float | None = None) -> IntegralResult:
    return integrate_space(f, cfg, tol)


def _flogf_rays(f: ScalarField, abs_tol: float):
    def ray(dirs, r):
        pts = r[:, :, None] * dirs[:, None, :]
        v = f(pts)
        keep = v > abs_tol
        phi = f.potential(np.where(keep[..., None], pts, 0.0))
        return np.where(keep, -v * phi, 0.0)

    return ray


def integral_flogf(f: ScalarField, cfg: QuadratureConfig | None = None, tol: float | None = None) -> IntegralResult:
    """Integral of f log f; the integrand is taken as 0 where f <= abs_tol."""
    cfg = cfg or QuadratureConfig()
    return integrate_space(f, cfg, tol, ray_fn=_flogf_rays(f, cfg.abs_tol))


@dataclass
class EntropyResult:
    value: float
    error_estimate: float
    mass: float
    flogf: float
    evals: int

    def to_dict(self):
        return {"value": self.value, "error_estimate": self.error_estimate, "evals": self.evals,
                "mass": self.mass, "flogf": self.flogf}


def entropy(f: ScalarField, cfg: QuadratureConfig | None = None, tol: float | None = None) -> EntropyResult:
    """Ent(f) = int f log f - J(f) log J(f)."""
    cfg = cfg or QuadratureConfig()
    J = total_mass(f, cfg, tol)
    if not J.value > max(10.0 * J.error_estimate, cfg.abs_tol):
        raise DegenerateMassError("degenerate mass: J(f) is below the quadrature noise floor")
    I = integral_flogf(f, cfg, tol)
    lj = math.log(J.value)
    val = I.value - J.value * lj
    err = I.error_estimate + abs(lj + 1.0) * J.error_estimate
    return EntropyResult(val, err, J.value, I.value, J.evals_used + I.evals_used)


# --------------------------------------------------------------------------
# sections, marginals, Radon transform
# --------------------------------------------------------------------------

def _unit(x) -> tuple[np.ndarray, float]:
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ValueError("direction must be nonzero")
    return x / r, r


def parallel_section(f: ScalarField, x, t: float, cfg: QuadratureConfig | None = None,
                     tol: float | None = None) -> IntegralResult:
    """A_{f, x/|x|}(t): integral of f over the hyperplane {z : z.x/|x| = t}."""
    u, _ = _unit(x)
    return integrate_hyperplane(f, u, t, cfg, tol)


def marginal(f: ScalarField, F: SubspaceFrame, x, cfg: QuadratureConfig | None = None,
             tol: float | None = None) -> IntegralResult:
    """pi_F(f)(x): integral of f over x + F^perp, with x given in F's basis."""
    cfg = cfg or QuadratureConfig()
    if F.dim != f.dim:
        raise ValueError("frame dimension does not match the field")
    xF = np.atleast_1d(np.asarray(x, dtype=float))
    if xF.size != F.k:
        raise ValueError("point must be given by its k coordinates in F")
    origin = xF @ F.basis
    Q = F.completion.T
    return polar_integral(lambda dirs, r: f.along_rays(dirs, r, origin), lambda dirs: f.rays(dirs, origin),
                          Q, Q.shape[1] - 1, cfg, f.dim, tol)


def radon(f: ScalarField, x, r: float, cfg: QuadratureConfig | None = None, tol: float | None = None) -> IntegralResult:
    """Rf(x, r) = |x|^{-1} A_{f, x/|x|}(r / |x|)."""
    u, nx = _unit(x)
    res = integrate_hyperplane(f, u, r / nx, cfg, tol)
    res.value /= nx
    res.error_estimate /= nx
    return res


# --------------------------------------------------------------------------
# functional dual mixed volume
# --------------------------------------------------------------------------

def _psi_f_rays(f: ScalarField, g: ScalarField, abs_tol: float):
    def ray(dirs, r):
        pts = r[:, :, None] * dirs[:, None, :]
        fv = f(pts)
        keep = fv > 0.0
        psi = g.potential(pts)
        with np.errstate(invalid="ignore"):
            out = np.where(keep, psi * fv, 0.0)
        # psi = +inf on the support of f makes the integral +inf
        return np.where(keep & np.isposinf(psi), np.inf, out)

    return ray


def dual_mixed(f: ScalarField, g: ScalarField, cfg: QuadratureConfig | None = None,
               tol: float | None = None) -> IntegralResult:
    """Integral of psi * exp(-phi) with f = exp(-phi), g = exp(-psi).

    Returns +inf when psi is infinite on a set charged by f, or when the
    integral over growing truncation radii keeps growing.
    """
    cfg = cfg or QuadratureConfig()
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    ray = _psi_f_rays(f, g, cfg.abs_tol)
    res = integrate_space(f, cfg, tol, ray_fn=ray)
    if math.isinf(res.value):
        res.value = math.inf
        return res
    # divergence check: mass of psi*f on the shells [R, 2R], [2R, 4R], [4R, 8R]
    n = f.dim
    rtol = cfg.tol(n) if tol is None else tol
    dirs, dw = res.info["directions"], res.info["direction_weights"]
    R = f.rays(dirs)[:, -1]
    grew = 0
    for k in (1.0, 2.0, 4.0):
        lo, hi = k * R, 2.0 * k * R

        def shell(idx, r, lo=lo, hi=hi):
            vals = ray(dirs[idx], r)
            return np.where((r >= lo[idx, None]) & (r <= hi[idx, None]), vals, 0.0)

        rr = ray_integrate(shell, np.column_stack([lo, hi]), n - 1, rtol, cfg.abs_tol, cfg.budget)
        tail = float(np.dot(dw, np.nan_to_num(rr.values, nan=np.inf)))
        if not abs(tail) <= max(rtol * abs(res.value), cfg.abs_tol):
            grew += 1
    if grew == 3:
        res.value = math.inf
    res.info["divergence_checks"] = grew
    return res


@dataclass
class LimitResult:
    value: float
    quotients: list
    ladder: list
    extrapolated: list
    monotone: bool
    info: dict = field(default_factory=dict)

    def to_dict(self):
        return {"value": self.value, "quotients": self.quotients, "ladder": self.ladder,
                "extrapolated": self.extrapolated, "monotone": self.monotone}


def dual_mixed_by_limit(f: ScalarField, g: ScalarField, t_sequence=None, cfg: QuadratureConfig | None = None,
                        tol: float | None = None) -> LimitResult:
    """-lim_{t->0+} (J(exp(-(phi + t psi))) - J(f)) / t via a decreasing ladder.

    All masses are computed on one cubature rule adapted to f, so the
    discretization error cancels in the differences.  Consecutive quotients
    are Richardson-extrapolated assuming an O(t) leading error.  A
    non-monotone quotient sequence is flagged (evidence of divergence).
    """
    cfg = cfg or QuadratureConfig()
    ts = np.asarray(t_sequence if t_sequence is not None else [1e-1, 1e-2, 1e-3, 1e-4], dtype=float)
    if np.any(np.diff(ts) >= 0) or np.any(ts <= 0):
        raise ValueError("t ladder must be positive and strictly decreasing")
    rule = space_rule(f, cfg, tol)
    pts = rule.points
    phi = f.potential(pts)
    psi = g.potential(pts)
    fv = np.exp(-phi)
    J0 = float(np.sum(rule.weights * fv))
    quot = []
    for t in ts:
        with np.errstate(invalid="ignore", over="ignore"):
            ft = np.where(fv > 0, np.exp(-(phi + t * psi)), 0.0)
        Jt = float(np.sum(rule.weights * ft))
        quot.append(-(Jt - J0) / t)
    quot = np.asarray(quot)
    extr = []
    for a, b, ta, tb in zip(quot[:-1], quot[1:], ts[:-1], ts[1:]):
        q = ta / tb
        extr.append((q * b - a) / (q - 1.0))
    d = np.diff(quot)
    monotone = bool(np.all(d >= -1e-12 * np.abs(quot[1:]).max()) or np.all(d <= 1e-12 * np.abs(quot[1:]).max()))
    value = extr[-1] if extr else float(quot[-1])
    return LimitResult(float(value), quot.tolist(), ts.tolist(), [float(e) for e in extr], monotone,
                       {"mass": J0, "nodes": len(pts)})


def log_mass_interpolation(f: ScalarField, g: ScalarField, ts, cfg: QuadratureConfig | None = None,
                           tol: float | None = None) -> np.ndarray:
    """t -> log J(exp(-(1-t) phi - t psi)), all on one rule.

    f^(1-t) g^t <= (1-t) f + t g <= f + g, so a rule adapted to f + g covers
    every interpolant.
    """
    cfg = cfg or QuadratureConfig()
    rule = space_rule(SumField(f, g), cfg, tol)
    phi, psi = f.potential(rule.points), g.potential(rule.points)
    out = []
    for t in ts:
        with np.errstate(invalid="ignore", over="ignore"):
            e = -(1.0 - t) * phi - t * psi
        vals = np.where(np.isfinite(e), np.exp(e), 0.0)
        out.append(math.log(float(np.sum(rule.weights * vals))))
    return np.asarray(out)
