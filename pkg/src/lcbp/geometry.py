"""Star bodies given by radial oracles, and the dual Brunn-Minkowski
operations on them: Minkowski functionals, harmonic p-combinations, volumes,
central sections and L_p dual mixed volumes."""

from __future__ import annotations

import threading
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.spatial import ConvexHull

from .config import IntegralResult, QuadratureConfig
from .quadrature import (
    DirectionGrid,
    direction_grid,
    integrate_great_subsphere,
    integrate_sphere,
    quasi_random_directions,
)

__all__ = [
    "StarBody", "DirectionGrid", "direction_grid", "ball", "ellipsoid", "cube", "radial_table",
    "star_body", "dilate", "linear_image", "minkowski_norm", "harmonic_p_combination", "p_scale",
    "volume", "central_section_volume", "dual_mixed_volume",
]


def _unit_rows(u) -> np.ndarray:
    u = np.atleast_2d(np.asarray(u, dtype=float))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class StarBody:
    """Star body in R^n described by its radial function on S^{n-1}.

    ``radial`` maps an (m, n) array of unit vectors to m positive radii.
    ``is_even`` (origin symmetry) and ``is_convex`` are claims made by the
    constructor; :meth:`check_even` samples the former.
    """

    def __init__(self, dim: int, radial: Callable[[np.ndarray], np.ndarray], *, is_even: bool = False,
                 is_convex: bool = False, name: str = "star", memoize: bool = False):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        self._radial = radial
        self.is_even = bool(is_even)
        self.is_convex = bool(is_convex)
        self.name = name
        self._memo = {} if memoize else None
        self._lock = threading.Lock()

    def __repr__(self):
        return f"StarBody({self.name}, n={self.dim})"

    def radial(self, u) -> np.ndarray:
        u = _unit_rows(u)
        if u.shape[1] != self.dim:
            raise ValueError(f"expected directions in R^{self.dim}")
        if self._memo is None:
            return self._checked(self._radial(u))
        keys = [row.tobytes() for row in np.round(u, 14) + 0.0]
        with self._lock:
            missing = [i for i, k in enumerate(keys) if k not in self._memo]
        if missing:
            vals = self._checked(self._radial(u[missing]))
            with self._lock:
                for i, v in zip(missing, vals):
                    self._memo.setdefault(keys[i], float(v))
        with self._lock:
            return np.array([self._memo[k] for k in keys])

    def _checked(self, vals) -> np.ndarray:
        vals = np.asarray(vals, dtype=float).reshape(-1)
        if not np.all(vals > 0):
            raise ValueError(f"radial function of {self.name} must be positive (got {vals.min()!r})")
        return vals

    def radial_at(self, x) -> np.ndarray:
        """Radial function extended to R^n \\ {0}: rho(x) = rho(x/|x|)/|x|."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        return self.radial(x / r[:, None]) / r

    def norm(self, x) -> np.ndarray:
        """Minkowski functional |x|_K (0 at the origin)."""
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.dim)
        r = np.linalg.norm(flat, axis=1)
        out = np.zeros(r.shape)
        nz = r > 0
        if np.any(nz):
            out[nz] = r[nz] / self.radial(flat[nz] / r[nz, None])
        return out.reshape(x.shape[:-1])

    def contains(self, x) -> np.ndarray:
        return self.norm(x) <= 1.0

    @cached_property
    def _rho_sample(self) -> np.ndarray:
        grid = direction_grid(self.dim, 2)
        extra = quasi_random_directions(self.dim, 64, seed=7) if self.dim >= 2 else np.empty((0, self.dim))
        return self.radial(np.concatenate([grid.nodes, extra]))

    @property
    def rho_min(self) -> float:
        """Sampled lower bound of the radial function."""
        return float(self._rho_sample.min())

    @property
    def rho_max(self) -> float:
        """Sampled upper bound of the radial function."""
        return float(self._rho_sample.max())

    def check_even(self, samples: int = 100, seed: int = 0, tol: float = 1e-9) -> float:
        """Largest relative |rho(u) - rho(-u)| over seeded random directions."""
        rng = np.random.default_rng(seed)
        u = _unit_rows(rng.standard_normal((samples, self.dim)))
        a, b = self.radial(u), self.radial(-u)
        return float(np.max(np.abs(a - b) / np.maximum(np.abs(a), tol)))


# --------------------------------------------------------------------------
# constructors
# --------------------------------------------------------------------------

def ball(n: int, radius: float = 1.0) -> StarBody:
    if radius <= 0:
        raise ValueError("radius must be positive")
    return StarBody(n, lambda u: np.full(u.shape[0], float(radius)), is_even=True, is_convex=True,
                    name=f"ball(r={radius:g})")


def ellipsoid(A=None, *, semi_axes=None) -> StarBody:
    """Ellipsoid {x : x^T A x <= 1} with rho(u) = (u^T A u)^{-1/2}.

    Pass either the SPD matrix ``A`` or axis-aligned ``semi_axes``.
    """
    if semi_axes is not None:
        a = np.asarray(semi_axes, dtype=float)
        if np.any(a <= 0):
            raise ValueError("semi-axes must be positive")
        A = np.diag(1.0 / a**2)
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("ellipsoid matrix must be square")
    A = 0.5 * (A + A.T)
    if np.linalg.eigvalsh(A).min() <= 0:
        raise ValueError("ellipsoid matrix must be positive definite")
    return StarBody(A.shape[0], lambda u: 1.0 / np.sqrt(np.einsum("mi,ij,mj->m", u, A, u)),
                    is_even=True, is_convex=True, name="ellipsoid")


def cube(n: int, half_width: float = 0.5) -> StarBody:
    """Cube [-h, h]^n with rho(u) = h / max_j |u_j|."""
    return StarBody(n, lambda u: half_width / np.max(np.abs(u), axis=1), is_even=True, is_convex=True,
                    name=f"cube(h={half_width:g})")


def star_body(n: int, radial: Callable[[np.ndarray], np.ndarray], *, is_even: bool = False,
              is_convex: bool = False, name: str = "star", memoize: bool = False) -> StarBody:
    return StarBody(n, radial, is_even=is_even, is_convex=is_convex, name=name, memoize=memoize)


def radial_table(nodes, values, *, is_even: bool = False) -> StarBody:
    """Star body interpolating tabulated (direction, radius) pairs linearly.

    Queries are located on the facet of the convex hull of the nodes that the
    ray crosses, and interpolated barycentrically there.
    """
    nodes = _unit_rows(nodes)
    values = np.asarray(values, dtype=float).reshape(-1)
    if nodes.shape[0] != values.size:
        raise ValueError("radial_table needs one radius per node")
    if np.any(values <= 0):
        raise ValueError("radial_table radii must be positive")
    n = nodes.shape[1]
    hull = ConvexHull(nodes)
    normals = hull.equations[:, :-1]
    offsets = -hull.equations[:, -1]
    if np.any(offsets <= 0):
        raise ValueError("radial_table nodes must surround the origin")
    simplices = hull.simplices

    def radial(u):
        score = (u @ normals.T) / offsets
        facet = np.argmax(score, axis=1)
        t = 1.0 / score[np.arange(len(u)), facet]
        verts = nodes[simplices[facet]]  # (m, n, n)
        lam = np.linalg.solve(np.transpose(verts, (0, 2, 1)), (t[:, None] * u)[..., None])[..., 0]
        lam = np.clip(lam, 0.0, None)
        lam /= lam.sum(axis=1, keepdims=True)
        return np.einsum("mk,mk->m", lam, values[simplices[facet]])

    return StarBody(n, radial, is_even=is_even, name="radial_table")


def dilate(K: StarBody, a: float) -> StarBody:
    if a <= 0:
        raise ValueError("dilation factor must be positive")
    return StarBody(K.dim, lambda u: a * K.radial(u), is_even=K.is_even, is_convex=K.is_convex,
                    name=f"{a:g}*{K.name}")


def linear_image(K: StarBody, T) -> StarBody:
    """TK, with rho_{TK}(u) = rho_K(T^{-1} u)."""
    T = np.asarray(T, dtype=float)
    Tinv = np.linalg.inv(T)

    def radial(u):
        w = u @ Tinv.T
        r = np.linalg.norm(w, axis=1)
        return K.radial(w / r[:, None]) / r

    return StarBody(K.dim, radial, is_even=K.is_even, is_convex=K.is_convex, name=f"T.{K.name}")


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def minkowski_norm(K: StarBody, x) -> np.ndarray | float:
    out = K.norm(x)
    return float(out) if np.ndim(out) == 0 else out


def _check_p(p: float) -> None:
    if p < 1:
        raise ValueError("harmonic combinations are defined here for p >= 1")


def p_scale(K: StarBody, s: float, p: float) -> StarBody:
    """s <> K, the body with radial s^{-1/p} rho_K."""
    _check_p(p)
    if s <= 0:
        raise ValueError("scale must be positive")
    return dilate(K, s ** (-1.0 / p))


def harmonic_p_combination(K: StarBody, L: StarBody, s: float, t: float, p: float) -> StarBody:
    """Radial (s rho_K^{-p} + t rho_L^{-p})^{-1/p}."""
    _check_p(p)
    if K.dim != L.dim:
        raise ValueError("dimension mismatch")
    if s < 0 or t < 0 or s + t == 0:
        raise ValueError("coefficients must be positive")

    def radial(u):
        return (s * K.radial(u) ** (-p) + t * L.radial(u) ** (-p)) ** (-1.0 / p)

    return StarBody(K.dim, radial, is_even=K.is_even and L.is_even, name=f"harm_{p:g}({K.name},{L.name})")


def volume(K: StarBody, cfg: QuadratureConfig | None = None) -> IntegralResult:
    """(1/n) * integral of rho_K^n over the sphere."""
    n = K.dim
    res = integrate_sphere(n, lambda u: K.radial(u) ** n, cfg)
    res.value /= n
    res.error_estimate /= n
    return res


def central_section_volume(K: StarBody, u, cfg: QuadratureConfig | None = None) -> IntegralResult:
    """V_{n-1}(K cap u^perp) = (1/(n-1)) * integral of rho_K^{n-1} over S^{n-1} cap u^perp."""
    n = K.dim
    if n < 2:
        raise ValueError("central sections need n >= 2")
    res = integrate_great_subsphere(lambda v: K.radial(v) ** (n - 1), u, cfg)
    res.value /= n - 1
    res.error_estimate /= n - 1
    return res


def dual_mixed_volume(K: StarBody, L: StarBody, p: float, cfg: QuadratureConfig | None = None) -> IntegralResult:
    """L_p dual mixed volume (1/n) * integral of rho_K^{n+p} rho_L^{-p}."""
    _check_p(p)
    if K.dim != L.dim:
        raise ValueError("dimension mismatch")
    n = K.dim
    res = integrate_sphere(n, lambda u: K.radial(u) ** (n + p) * L.radial(u) ** (-p), cfg)
    res.value /= n
    res.error_estimate /= n
    return res
