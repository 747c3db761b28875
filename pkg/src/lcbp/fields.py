"""Nonnegative scalar fields and convex potentials as evaluation oracles.

A :class:`ScalarField` evaluates on arrays of shape (..., n).  Besides values
it knows its potential -log f (exactly, where a closed form exists, so that
f log f and psi * f never go through log of an underflowed number) and how
to cut a ray from a point into pieces on which it is smooth.  The quadrature
engines only ever talk to fields through ``along_rays`` and ``rays``.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .config import TRUNCATION_EPS
from .geometry import StarBody

_DECAY = math.log(1.0 / TRUNCATION_EPS)


def _ball_exit(dirs: np.ndarray, origin: np.ndarray | None, center: np.ndarray, R: float) -> np.ndarray:
    """Distance along each ray from ``origin`` to the sphere |x - center| = R."""
    o = np.zeros(dirs.shape[1]) if origin is None else np.asarray(origin, dtype=float)
    d = o - center
    b = dirs @ d
    disc = b * b - d @ d + R * R
    with np.errstate(invalid="ignore"):
        t = -b + np.sqrt(np.clip(disc, 0.0, None))
    t = np.where(disc > 0, t, 0.0)
    return np.clip(t, 0.0, None)


class ScalarField:
    """Nonnegative field on R^n.

    Subclasses override ``_eval`` and, when they can do better than the
    generic ball truncation, ``potential`` and ``rays``.  Instances are
    treated as immutable.
    """

    is_even = False
    is_log_concave = False

    def __init__(self, dim: int, *, support_radius: float, sup_bound: float, is_even: bool = False,
                 is_log_concave: bool = False, center=None, name: str = "field"):
        if dim < 1:
            raise ValueError("dimension must be positive")
        if not (support_radius > 0 and math.isfinite(support_radius)):
            raise ValueError("fields need a finite positive support radius")
        self.dim = int(dim)
        self.support_radius = float(support_radius)
        self.sup_bound = float(sup_bound)
        self.is_even = bool(is_even)
        self.is_log_concave = bool(is_log_concave)
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        self.name = name
        self.value_at_origin = float(self._eval(np.zeros((1, dim)))[0])

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} n={self.dim}>"

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points in R^{self.dim}, got shape {x.shape}")
        flat = x.reshape(-1, self.dim)
        return self._eval(flat).reshape(x.shape[:-1])

    def potential(self, x) -> np.ndarray:
        """-log f, +inf where f vanishes."""
        with np.errstate(divide="ignore"):
            return -np.log(self(x))

    def rays(self, dirs: np.ndarray, origin=None) -> np.ndarray:
        """Break radii (m, B) along rays origin + r * dirs; last column truncates."""
        return _ball_exit(dirs, origin, self.center, self.support_radius)[:, None]

    def along_rays(self, dirs: np.ndarray, r: np.ndarray, origin=None, fn=None) -> np.ndarray:
        pts = r[:, :, None] * dirs[:, None, :]
        if origin is not None:
            pts = pts + np.asarray(origin, dtype=float)
        return (fn or self)(pts)


class CallableField(ScalarField):
    """Field from plain callables; every metadata claim is the caller's."""

    def __init__(self, dim, func, *, support_radius, sup_bound, potential=None, is_even=False,
                 is_log_concave=False, center=None, name="callable"):
        self._func = func
        self._pot = potential
        super().__init__(dim, support_radius=support_radius, sup_bound=sup_bound, is_even=is_even,
                         is_log_concave=is_log_concave, center=center, name=name)

    def _eval(self, x):
        return np.asarray(self._func(x), dtype=float)

    def potential(self, x):
        if self._pot is None:
            return super().potential(x)
        return np.asarray(self._pot(np.asarray(x, dtype=float)), dtype=float)


class GaussianField(ScalarField):
    """exp(-(x - mu)^T C^{-1} (x - mu) / 2)."""

    def __init__(self, cov, center=None, name="gaussian"):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        w = np.linalg.eigvalsh(cov)
        if w.min() <= 0:
            raise ValueError("covariance must be positive definite")
        self.cov = cov
        self.precision = np.linalg.inv(cov)
        n = cov.shape[0]
        mu = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        even = not np.any(mu)
        super().__init__(n, support_radius=math.sqrt(2.0 * _DECAY * w.max()), sup_bound=1.0, is_even=even,
                         is_log_concave=True, center=mu, name=name)

    def potential(self, x):
        d = np.asarray(x, dtype=float) - self.center
        return 0.5 * np.einsum("...i,ij,...j->...", d, self.precision, d)

    def _eval(self, x):
        return np.exp(-self.potential(x))

    def rays(self, dirs, origin=None):
        # exit from the ellipsoid where the potential reaches the truncation
        # level, tighter than the bounding ball along the short axes
        o = np.zeros(self.dim) if origin is None else np.asarray(origin, dtype=float)
        d = o - self.center
        Pd = dirs @ self.precision
        a = np.einsum("ij,ij->i", Pd, dirs)
        b = Pd @ d
        c = d @ self.precision @ d - 2.0 * _DECAY
        disc = b * b - a * c
        with np.errstate(invalid="ignore"):
            t = (-b + np.sqrt(np.clip(disc, 0.0, None))) / a
        return np.clip(np.where(disc > 0, t, 0.0), 0.0, None)[:, None]

    def along_rays(self, dirs, r, origin=None, fn=None):
        if fn is None and not np.any(self.center) and (origin is None or not np.any(origin)):
            q = np.einsum("ij,jk,ik->i", dirs, self.precision, dirs)
            return np.exp(-0.5 * q[:, None] * r * r)
        return super().along_rays(dirs, r, origin, fn)


class ExpNormField(ScalarField):
    """exp(-c |x|_K^p)."""

    def __init__(self, K: StarBody, p: float, c: float, log_concave: bool | None = None):
        if p < 1:
            raise ValueError("exponent p must be >= 1")
        if c <= 0:
            raise ValueError("c must be positive")
        self.body, self.p, self.c = K, float(p), float(c)
        self._reach = (_DECAY / c) ** (1.0 / p)
        lc = K.is_convex if log_concave is None else log_concave
        super().__init__(K.dim, support_radius=self._reach * K.rho_max * 1.0001, sup_bound=1.0, is_even=K.is_even,
                         is_log_concave=lc, name=f"exp(-{c:g}|x|_{K.name}^{p:g})")

    def potential(self, x):
        return self.c * self.body.norm(x) ** self.p

    def _eval(self, x):
        return np.exp(-self.potential(x))

    def rays(self, dirs, origin=None):
        if origin is None or not np.any(origin):
            return (self._reach * self.body.radial(dirs))[:, None]
        return super().rays(dirs, origin)

    def along_rays(self, dirs, r, origin=None, fn=None):
        # |r u|_K = r / rho_K(u): one radial evaluation per ray, not per node
        if fn is None and (origin is None or not np.any(origin)):
            return np.exp(-self.c * (r / self.body.radial(dirs)[:, None]) ** self.p)
        return super().along_rays(dirs, r, origin, fn)


class CharField(ScalarField):
    """Indicator of the star body K."""

    def __init__(self, K: StarBody):
        self.body = K
        super().__init__(K.dim, support_radius=K.rho_max * 1.0001, sup_bound=1.0, is_even=K.is_even,
                         is_log_concave=K.is_convex, name=f"chi_{K.name}")

    def _eval(self, x):
        return (self.body.norm(x) <= 1.0).astype(float)

    def potential(self, x):
        return np.where(self.body.norm(x) <= 1.0, 0.0, np.inf)

    def along_rays(self, dirs, r, origin=None, fn=None):
        if fn is None and (origin is None or not np.any(origin)):
            return (r <= self.body.radial(dirs)[:, None]).astype(float)
        return super().along_rays(dirs, r, origin, fn)

    def rays(self, dirs, origin=None):
        if origin is None or not np.any(origin):
            return self.body.radial(dirs)[:, None]
        o = np.asarray(origin, dtype=float)
        if self.body.is_convex and self.body.norm(o) < 1.0:
            # single exit point of a convex body, located by bisection
            lo = np.zeros(len(dirs))
            hi = np.full(len(dirs), 2.0 * self.support_radius)
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                inside = self.body.norm(o + mid[:, None] * dirs) <= 1.0
                lo = np.where(inside, mid, lo)
                hi = np.where(inside, hi, mid)
            return (0.5 * (lo + hi))[:, None]
        return super().rays(dirs, origin)


class LinearField(ScalarField):
    """x -> f(Tx)."""

    def __init__(self, f: ScalarField, T):
        T = np.asarray(T, dtype=float)
        if T.shape != (f.dim, f.dim):
            raise ValueError("matrix shape does not match field dimension")
        cond = np.linalg.cond(T)
        if not np.isfinite(cond) or cond > 1e10:
            raise ValueError("matrix is singular or too ill-conditioned")
        self.base, self.T = f, T
        self.Tinv = np.linalg.inv(T)
        super().__init__(f.dim, support_radius=np.linalg.norm(self.Tinv, 2) * (f.support_radius + 1e-12),
                         sup_bound=f.sup_bound, is_even=f.is_even, is_log_concave=f.is_log_concave,
                         center=self.Tinv @ f.center, name=f"{f.name}oT")

    def _eval(self, x):
        return self.base._eval(x @ self.T.T)

    def potential(self, x):
        return self.base.potential(np.asarray(x, dtype=float) @ self.T.T)

    def rays(self, dirs, origin=None):
        Td = dirs @ self.T.T
        s = np.linalg.norm(Td, axis=1)
        o = None if origin is None else self.T @ np.asarray(origin, dtype=float)
        return self.base.rays(Td / s[:, None], o) / s[:, None]


class ScaledField(ScalarField):
    """a * f."""

    def __init__(self, f: ScalarField, a: float):
        if not a > 0:
            raise ValueError("scale factor must be positive")
        self.base, self.a = f, float(a)
        super().__init__(f.dim, support_radius=f.support_radius, sup_bound=a * f.sup_bound, is_even=f.is_even,
                         is_log_concave=f.is_log_concave, center=f.center, name=f"{a:g}*{f.name}")

    def _eval(self, x):
        return self.a * self.base._eval(x)

    def potential(self, x):
        return self.base.potential(x) - math.log(self.a)

    def rays(self, dirs, origin=None):
        return self.base.rays(dirs, origin)

    def along_rays(self, dirs, r, origin=None, fn=None):
        if fn is None:
            return self.a * self.base.along_rays(dirs, r, origin)
        return super().along_rays(dirs, r, origin, fn)


def _merge_breaks(parts: list[np.ndarray], cut: np.ndarray) -> np.ndarray:
    allb = np.sort(np.concatenate(parts, axis=1), axis=1)
    allb = allb[:, np.any(allb < cut[:, None], axis=0)]  # columns clipped on every ray are empty segments
    return np.minimum(np.concatenate([allb, cut[:, None]], axis=1), cut[:, None])


class ProductField(ScalarField):
    """Pointwise product of fields."""

    def __init__(self, *fs: ScalarField):
        if len(fs) < 2 or len({f.dim for f in fs}) != 1:
            raise ValueError("product needs at least two fields of equal dimension")
        self.factors = fs
        reach = min(f.support_radius + np.linalg.norm(f.center) for f in fs)
        super().__init__(fs[0].dim, support_radius=reach, sup_bound=math.prod(f.sup_bound for f in fs),
                         is_even=all(f.is_even for f in fs), is_log_concave=all(f.is_log_concave for f in fs),
                         name="*".join(f.name for f in fs))

    def _eval(self, x):
        out = self.factors[0]._eval(x)
        for f in self.factors[1:]:
            out = out * f._eval(x)
        return out

    def potential(self, x):
        return sum(f.potential(x) for f in self.factors)

    def along_rays(self, dirs, r, origin=None, fn=None):
        if fn is None:
            out = self.factors[0].along_rays(dirs, r, origin)
            for f in self.factors[1:]:
                out = out * f.along_rays(dirs, r, origin)
            return out
        return super().along_rays(dirs, r, origin, fn)

    def rays(self, dirs, origin=None):
        parts = [f.rays(dirs, origin) for f in self.factors]
        cut = np.min(np.stack([p[:, -1] for p in parts]), axis=0)
        return _merge_breaks(parts, cut)


class DualDifferenceField(ScalarField):
    """(f(x) + f(-x)) / 2."""

    def __init__(self, f: ScalarField):
        self.base = f
        super().__init__(f.dim, support_radius=f.support_radius + np.linalg.norm(f.center), sup_bound=f.sup_bound,
                         is_even=True, is_log_concave=False, name=f"D({f.name})")

    def _eval(self, x):
        return 0.5 * (self.base._eval(x) + self.base._eval(-x))

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.base.potential(x), self.base.potential(-x)
        m = np.minimum(a, b)
        with np.errstate(invalid="ignore"):
            out = m - np.log(0.5 * (1.0 + np.exp(-(np.maximum(a, b) - m))))
        return np.where(np.isinf(m), np.inf, out)

    def rays(self, dirs, origin=None):
        neg = None if origin is None else -np.asarray(origin, dtype=float)
        parts = [self.base.rays(dirs, origin), self.base.rays(-dirs, neg)]
        cut = np.max(np.stack([p[:, -1] for p in parts]), axis=0)
        return _merge_breaks(parts, cut)


class SumField(ScalarField):
    """Pointwise sum of fields, a smooth envelope used to place cubature nodes.

    Unlike the maximum it has no kink where the parts cross, so rays through
    the crossing need no extra refinement.
    """

    def __init__(self, *fs: ScalarField):
        if len(fs) < 2 or len({f.dim for f in fs}) != 1:
            raise ValueError("sum needs at least two fields of equal dimension")
        self.parts = fs
        reach = max(f.support_radius + np.linalg.norm(f.center) for f in fs)
        super().__init__(fs[0].dim, support_radius=reach, sup_bound=sum(f.sup_bound for f in fs),
                         is_even=all(f.is_even for f in fs), name="sum(" + ",".join(f.name for f in fs) + ")")

    def _eval(self, x):
        return np.sum(np.stack([f._eval(x) for f in self.parts]), axis=0)

    def rays(self, dirs, origin=None):
        parts = [f.rays(dirs, origin) for f in self.parts]
        cut = np.max(np.stack([p[:, -1] for p in parts]), axis=0)
        return _merge_breaks(parts, cut)


# --------------------------------------------------------------------------
# convex potentials
# --------------------------------------------------------------------------

class ConvexPotential:
    """Extended-real potential phi; +inf is IEEE infinity, never a sentinel.

    ``dom_radius`` is the radius of a ball containing dom(phi) (``inf`` when
    unbounded); ``inf_value`` is inf phi.
    """

    def __init__(self, dim: int, func: Callable[[np.ndarray], np.ndarray], *, inf_value: float,
                 dom_radius: float = math.inf, is_even: bool = False, is_convex: bool = True,
                 growth_radius: float | None = None, name: str = "phi"):
        self.dim = int(dim)
        self._func = func
        self.inf_value = float(inf_value)
        self.dom_radius = float(dom_radius)
        self.is_even = bool(is_even)
        self.is_convex = bool(is_convex)
        self.growth_radius = growth_radius
        self.name = name

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.dim)
        return np.asarray(self._func(flat), dtype=float).reshape(x.shape[:-1])

    def to_field(self, support_radius: float | None = None, is_log_concave: bool | None = None) -> ScalarField:
        """exp(-phi) as a field.  ``support_radius`` (or the potential's
        ``growth_radius``) must bound the region where exp(-phi) matters."""
        R = support_radius or self.growth_radius or (self.dom_radius if math.isfinite(self.dom_radius) else None)
        if R is None:
            raise ValueError("exp(-phi) needs a support radius (coercivity certificate)")
        return CallableField(self.dim, lambda x: np.exp(-self(x)), potential=self, support_radius=R,
                             sup_bound=math.exp(-self.inf_value), is_even=self.is_even,
                             is_log_concave=self.is_convex if is_log_concave is None else is_log_concave,
                             name=f"exp(-{self.name})")


def field_potential(f: ScalarField) -> ConvexPotential:
    """The potential -log f of a field, as a :class:`ConvexPotential`."""
    return ConvexPotential(f.dim, f.potential, inf_value=-math.log(f.sup_bound), is_even=f.is_even,
                           is_convex=f.is_log_concave, growth_radius=f.support_radius, name=f"-log {f.name}")


def quadratic_potential(A, center=None, shift: float = 0.0) -> ConvexPotential:
    """phi(x) = (x - c)^T A (x - c) / 2 + shift with A SPD."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    lam = np.linalg.eigvalsh(A).min()
    if lam <= 0:
        raise ValueError("quadratic potential needs a positive definite matrix")

    def func(x):
        d = x - c
        return 0.5 * np.einsum("mi,ij,mj->m", d, A, d) + shift

    R = math.sqrt(2.0 * (_DECAY + max(0.0, -shift)) / lam) + np.linalg.norm(c)
    return ConvexPotential(n, func, inf_value=shift, is_even=not np.any(c), growth_radius=R, name="quad")


def shift_potential(phi: ConvexPotential, c: float) -> ConvexPotential:
    return ConvexPotential(phi.dim, lambda x: phi(x) + c, inf_value=phi.inf_value + c, dom_radius=phi.dom_radius,
                           is_even=phi.is_even, is_convex=phi.is_convex, growth_radius=phi.growth_radius,
                           name=f"({phi.name}+{c:g})")


# --------------------------------------------------------------------------
# constructors
# --------------------------------------------------------------------------

def make_gaussian(n: int, sigma=1.0, center=None) -> GaussianField:
    """exp(-|x|^2 / (2 sigma^2)); ``sigma`` may be a per-axis vector."""
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (n,))
    if np.any(sig <= 0):
        raise ValueError("sigma must be positive")
    return GaussianField(np.diag(sig**2), center=center,
                         name=f"gauss(sigma={float(sig[0]):g})" if np.all(sig == sig[0]) else "gauss")


def make_gaussian_cov(cov, center=None) -> GaussianField:
    return GaussianField(cov, center=center)


def make_exp_body_norm(K: StarBody, p: float = 1.0, c: float = 1.0, log_concave: bool | None = None) -> ExpNormField:
    return ExpNormField(K, p, c, log_concave)


def make_characteristic(K: StarBody) -> CharField:
    return CharField(K)


def compose_linear(f: ScalarField, T) -> LinearField:
    return LinearField(f, T)


def scale_field(f: ScalarField, a: float) -> ScalarField:
    if a == 1:
        return f
    return ScaledField(f, a)


def product(*fs: ScalarField) -> ProductField:
    return ProductField(*fs)


def dual_difference(f: ScalarField) -> ScalarField:
    """Even symmetrization (f(x) + f(-x)) / 2; an even field is returned as is."""
    if f.is_even:
        return f
    return DualDifferenceField(f)


# --------------------------------------------------------------------------
# sampled claim checks
# --------------------------------------------------------------------------

def _sample_points(f: ScalarField, rng, count: int, spread: float = 0.6) -> np.ndarray:
    d = rng.standard_normal((count, f.dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = spread * f.support_radius * rng.random(count) ** (1.0 / f.dim)
    return f.center + d * r[:, None]


def check_even(f: ScalarField, samples: int = 100, seed: int = 0) -> float:
    """Max |f(x) - f(-x)| over sampled points."""
    x = _sample_points(f, np.random.default_rng(seed), samples)
    return float(np.max(np.abs(f(x) - f(-x))))


def check_log_concave(f: ScalarField, samples: int = 100, seed: int = 0) -> float:
    """Largest violation of f((x+y)/2)^2 >= f(x) f(y), relative to f(x) f(y)."""
    rng = np.random.default_rng(seed)
    x, y = _sample_points(f, rng, samples), _sample_points(f, rng, samples)
    lhs = f(0.5 * (x + y)) ** 2
    rhs = f(x) * f(y)
    viol = np.where(rhs > 0, (rhs - lhs) / np.where(rhs > 0, rhs, 1.0), 0.0)
    return float(max(0.0, viol.max()))


def check_sup(f: ScalarField, samples: int = 100, seed: int = 0) -> float:
    """Largest f(x) - sup_bound over sampled points (<= 0 when the claim holds)."""
    x = _sample_points(f, np.random.default_rng(seed), samples)
    return float(np.max(f(x)) - f.sup_bound)
