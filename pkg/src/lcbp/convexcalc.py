"""Convex calculus on tabulated potentials: Legendre transform, infimal
convolution, right scalar multiplication and the pointwise harmonic sum.

A :class:`GridPotential` is an extended-real table on a regular lattice in an
axis-aligned box of R^n (n <= 3).  Outside the box the potential is +inf, so
every transform below is the exact discrete operation on the table.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import conjugate_rows, minplus
from .fields import ConvexPotential

MAX_GRID_DIM = 3


@dataclass(frozen=True, eq=False)
class GridPotential:
    """Potential tabulated on ``np.linspace(box[k, 0], box[k, 1], shape[k])`` per axis."""

    box: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        box = np.atleast_2d(np.asarray(self.box, dtype=float))
        vals = np.asarray(self.values, dtype=float)
        if box.shape != (vals.ndim, 2):
            raise ValueError("box must hold one (lo, hi) pair per table axis")
        if np.any(box[:, 1] < box[:, 0]):
            raise ValueError("box bounds must satisfy lo <= hi")
        if np.any(np.isnan(vals)) or np.any(np.isneginf(vals)):
            raise ValueError("grid values must be finite or +inf")
        if not np.any(np.isfinite(vals)):
            raise ValueError("improper potential: all values are +inf")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def resolution(self) -> tuple:
        return self.values.shape

    @property
    def spacing(self) -> np.ndarray:
        n = np.asarray(self.resolution)
        return np.where(n > 1, (self.box[:, 1] - self.box[:, 0]) / np.maximum(n - 1, 1), 0.0)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, m) for (lo, hi), m in zip(self.box, self.resolution)]

    def points(self) -> np.ndarray:
        """Lattice points, shape resolution + (n,)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def __call__(self, x) -> np.ndarray:
        return resample(self, x)

    def allclose(self, other: "GridPotential", atol: float = 1e-12) -> bool:
        if self.resolution != other.resolution or not np.allclose(self.box, other.box, atol=atol):
            return False
        a, b = self.values, other.values
        return bool(np.array_equal(np.isinf(a), np.isinf(b)) and np.allclose(a[np.isfinite(a)], b[np.isfinite(b)], atol=atol))


def tabulate(phi, box, resolution) -> GridPotential:
    """Sample a potential oracle (e.g. a :class:`ConvexPotential`) on a lattice."""
    box = np.atleast_2d(np.asarray(box, dtype=float))
    res = tuple(int(m) for m in np.broadcast_to(resolution, (box.shape[0],)))
    axes = [np.linspace(lo, hi, m) for (lo, hi), m in zip(box, res)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = np.asarray(phi(pts.reshape(-1, box.shape[0])), dtype=float).reshape(res)
    return GridPotential(box, vals)


def _check_dim(phi: GridPotential) -> None:
    if phi.dim > MAX_GRID_DIM:
        raise ValueError(f"grid transforms are limited to n <= {MAX_GRID_DIM}")


# --------------------------------------------------------------------------
# Legendre transform
# --------------------------------------------------------------------------

def slope_range(phi: GridPotential) -> np.ndarray:
    """Per-axis (min, max) finite-difference slope between finite neighbours."""
    out = np.zeros((phi.dim, 2))
    h = phi.spacing
    for k in range(phi.dim):
        if phi.resolution[k] < 2:
            continue
        d = np.diff(phi.values, axis=k)
        with np.errstate(invalid="ignore"):
            s = d[np.isfinite(d)] / h[k]
        if s.size:
            out[k] = s.min(), s.max()
    return out


def dual_box(phi: GridPotential, margin: float = 0.1) -> np.ndarray:
    """Slope range widened by ``margin`` of its width on each side."""
    sr = slope_range(phi)
    width = sr[:, 1] - sr[:, 0]
    pad = margin * np.where(width > 0, width, np.maximum(np.abs(sr).max(axis=1), 1.0))
    return np.column_stack([sr[:, 0] - pad, sr[:, 1] + pad])


def _conjugate_axis(F: np.ndarray, x: np.ndarray, y: np.ndarray, axis: int, brute: bool) -> np.ndarray:
    """max over x along ``axis`` of (x y - F); F may hold +inf."""
    moved = np.moveaxis(F, axis, -1)
    rows = moved.reshape(-1, moved.shape[-1])
    if brute:
        with np.errstate(invalid="ignore"):
            out = np.max(np.multiply.outer(y, x)[None] - rows[:, None, :], axis=2)
    else:
        out = conjugate_rows(x, rows, y)
    out = out.reshape(moved.shape[:-1] + (y.size,))
    return np.moveaxis(out, -1, axis)


def legendre_transform(phi: GridPotential, box=None, resolution=None, *, method: str = "envelope",
                       margin: float = 0.1) -> GridPotential:
    """Discrete conjugate phi*(y) = max_x (x.y - phi(x)) over the lattice.

    The dual lattice defaults to the slope range of ``phi`` (widened by
    ``margin``) at the input resolution.  ``method="envelope"`` walks the
    lower convex hull per axis; ``"brute"`` compares every pair.  Both are
    exact and agree to rounding; the result is a maximum of affine functions
    and so midpoint-convex on any lattice.
    """
    _check_dim(phi)
    if method not in ("envelope", "brute"):
        raise ValueError("method must be 'envelope' or 'brute'")
    box = dual_box(phi, margin) if box is None else np.atleast_2d(np.asarray(box, dtype=float))
    res = phi.resolution if resolution is None else tuple(np.broadcast_to(resolution, (phi.dim,)).astype(int))
    ys = [np.linspace(lo, hi, m) for (lo, hi), m in zip(box, res)]
    xs = phi.axes()
    # phi*(y) = max_{x_0} (x_0 y_0 - (-max_{x_1} (x_1 y_1 - ... phi)))
    G = phi.values
    for k in reversed(range(phi.dim)):
        G = -_conjugate_axis(G, xs[k], ys[k], k, method == "brute")
    return GridPotential(box, -G)


# --------------------------------------------------------------------------
# infimal convolution and right scalar multiplication
# --------------------------------------------------------------------------

def infimal_convolution(phi: GridPotential, psi: GridPotential, *, method: str = "direct") -> GridPotential:
    """min_y phi(x - y) + psi(y) on the Minkowski-sum lattice.

    Both tables need the same spacing on every axis.  ``method="direct"``
    minimizes over all lattice pairs; ``"conjugate"`` evaluates
    (phi* + psi*)* and is only valid for convex inputs.
    """
    _check_dim(phi)
    if phi.dim != psi.dim:
        raise ValueError("dimension mismatch")
    single = (np.asarray(phi.resolution) == 1) | (np.asarray(psi.resolution) == 1)
    if not np.all(single | np.isclose(phi.spacing, psi.spacing, rtol=1e-9, atol=0.0)):
        raise ValueError("box/resolution mismatch: infimal convolution needs equal lattice spacing")
    box = phi.box + psi.box
    res = tuple(a + b - 1 for a, b in zip(phi.resolution, psi.resolution))
    if method == "direct":
        return GridPotential(box, minplus(phi.values, psi.values))
    if method != "conjugate":
        raise ValueError("method must be 'direct' or 'conjugate'")
    # shared dual lattice covering both slope ranges
    a, b = dual_box(phi), dual_box(psi)
    dbox = np.column_stack([np.minimum(a[:, 0], b[:, 0]), np.maximum(a[:, 1], b[:, 1])])
    dres = tuple(max(r1, r2) for r1, r2 in zip(phi.resolution, psi.resolution))
    s = legendre_transform(phi, dbox, dres).values + legendre_transform(psi, dbox, dres).values
    return legendre_transform(GridPotential(dbox, s), box, res)


def right_scalar_mult(phi: GridPotential, t: float) -> GridPotential:
    """(phi t)(x) = t phi(x / t): values scaled by t on the box scaled by t."""
    if not t > 0:
        raise ValueError("right scalar multiplication needs t > 0")
    return GridPotential(phi.box * t, phi.values * t)


def harmonic_combination(phi, psi, t: float):
    """Pointwise phi + t psi for two grids on one lattice or two oracles."""
    if not t > 0:
        raise ValueError("t must be positive")
    if phi.dim != psi.dim:
        raise ValueError("dimension mismatch")
    if isinstance(phi, GridPotential) and isinstance(psi, GridPotential):
        if phi.resolution != psi.resolution or not np.allclose(phi.box, psi.box):
            raise ValueError("box/resolution mismatch")
        return GridPotential(phi.box, phi.values + t * psi.values)
    if isinstance(phi, GridPotential) or isinstance(psi, GridPotential):
        raise TypeError("harmonic_combination needs two grids or two oracles")
    return ConvexPotential(phi.dim, lambda x: phi(x) + t * psi(x), inf_value=phi.inf_value + t * psi.inf_value,
                           dom_radius=min(phi.dom_radius, psi.dom_radius), is_even=phi.is_even and psi.is_even,
                           is_convex=phi.is_convex and psi.is_convex,
                           growth_radius=phi.growth_radius or psi.growth_radius,
                           name=f"({phi.name}+{t:g}*{psi.name})")


def harmonic_identity_deviation(phi: GridPotential, psi: GridPotential, t: float, inner: float = 0.5) -> float:
    """Max |phi + t psi - (phi* box (psi* t))*| over the central ``inner``
    fraction of the lattice (the truncated box distorts slopes near its edge).

    ``psi*`` is tabulated with spacing h / t so that ``psi* t`` lands on the
    lattice of ``phi*``, as the infimal convolution requires.
    """
    if phi.resolution != psi.resolution or not np.allclose(phi.box, psi.box):
        raise ValueError("box/resolution mismatch")
    lhs = harmonic_combination(phi, psi, t)
    a = legendre_transform(phi)
    h = a.spacing
    b0 = dual_box(psi)
    lo = b0[:, 0]
    counts = np.maximum(np.ceil((b0[:, 1] - lo) / (h / t)).astype(int) + 1, 2)
    bbox = np.column_stack([lo, lo + (counts - 1) * h / t])
    b = legendre_transform(psi, bbox, tuple(counts))
    conv = infimal_convolution(a, right_scalar_mult(b, t))
    rhs = legendre_transform(conv, phi.box, phi.resolution)
    sl = tuple(slice(int(m * (1 - inner) / 2), m - int(m * (1 - inner) / 2)) for m in phi.resolution)
    L, R = lhs.values[sl], rhs.values[sl]
    both = np.isfinite(L) & np.isfinite(R)
    if not np.array_equal(np.isfinite(L), np.isfinite(R)):
        return math.inf
    return float(np.max(np.abs(L[both] - R[both]))) if np.any(both) else 0.0


# --------------------------------------------------------------------------
# resampling and CSV
# --------------------------------------------------------------------------

def resample(phi: GridPotential, x) -> np.ndarray:
    """Multilinear interpolation; +inf outside the box or next to +inf nodes."""
    from scipy.interpolate import RegularGridInterpolator

    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, phi.dim)
    axes = phi.axes()
    keep = [len(a) > 1 for a in axes]
    vals = phi.values.reshape(tuple(m for m, k in zip(phi.resolution, keep) if k) or (1,))
    inside = np.all((flat >= phi.box[:, 0] - 1e-12) & (flat <= phi.box[:, 1] + 1e-12), axis=1)
    for k, a in enumerate(axes):
        if len(a) == 1:
            inside &= np.isclose(flat[:, k], a[0])
    out = np.full(flat.shape[0], np.inf)
    if any(keep) and np.any(inside):
        interp = RegularGridInterpolator([a for a, k in zip(axes, keep) if k], vals, bounds_error=False,
                                         fill_value=np.inf)
        with np.errstate(invalid="ignore"):
            v = interp(np.clip(flat[inside][:, keep], phi.box[keep, 0], phi.box[keep, 1]))
        out[inside] = np.where(np.isnan(v), np.inf, v)
    elif np.any(inside):
        out[inside] = float(phi.values.reshape(-1)[0])
    return out.reshape(x.shape[:-1])


def to_csv(phi: GridPotential) -> str:
    """Header ``i0,...,value`` plus a ``# box`` comment; +inf written as ``+inf``."""
    buf = io.StringIO()
    buf.write("# box " + " ".join(f"{float(lo)!r}:{float(hi)!r}" for lo, hi in phi.box) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"i{k}" for k in range(phi.dim)] + ["value"])
    for idx in np.ndindex(*phi.resolution):
        v = phi.values[idx]
        w.writerow(list(idx) + ["+inf" if np.isposinf(v) else repr(float(v))])
    return buf.getvalue()


def from_csv(text: str) -> GridPotential:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# box "):
        raise ValueError("grid CSV must start with a '# box lo:hi ...' line")
    box = np.array([[float(s) for s in part.split(":")] for part in lines[0][6:].split()])
    rows = list(csv.reader(lines[1:]))
    header, body = rows[0], rows[1:]
    n = len(header) - 1
    if n != box.shape[0]:
        raise ValueError("dimension mismatch between box and index columns")
    idx = np.array([[int(c) for c in r[:n]] for r in body], dtype=int)
    vals = np.array([math.inf if r[n].strip() in ("+inf", "inf") else float(r[n]) for r in body])
    shape = tuple(idx.max(axis=0) + 1)
    table = np.full(shape, np.nan)
    table[tuple(idx.T)] = vals
    if np.any(np.isnan(table)):
        raise ValueError("grid CSV is missing lattice entries")
    return GridPotential(box, table)
