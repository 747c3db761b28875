"""Hot inner loops, compiled with numba when available.

Every kernel exists twice: a numba ``@njit`` loop and a vectorized numpy
equivalent.  ``LCBP_NUMBA=0`` in the environment forces the numpy path; the
numba path is also skipped when numba cannot be imported.  Both paths return
the same numbers up to floating-point reassociation.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("LCBP_NUMBA", "1").lower() not in ("0", "false", "no", "off")

_CHUNK = 1 << 22


# --------------------------------------------------------------------------
# discrete Legendre transform along the last axis
# --------------------------------------------------------------------------

def _conjugate_rows_numpy(x, F, y):
    R, N = F.shape
    out = np.full((R, y.size), -np.inf)
    step = max(1, _CHUNK // max(1, N * y.size))
    xy = np.multiply.outer(y, x)  # (M, N)
    for lo in range(0, R, step):
        blk = F[lo:lo + step]
        out[lo:lo + step] = np.max(xy[None, :, :] - blk[:, None, :], axis=2)
    return out


if _HAVE_NUMBA:

    @njit(cache=True)
    def _conjugate_rows_numba(x, F, y):
        R, N = F.shape
        M = y.size
        out = np.empty((R, M))
        hx = np.empty(N)
        hf = np.empty(N)
        for row in range(R):
            # lower convex hull of the finite points (x_i, F_i), x ascending
            h = 0
            for i in range(N):
                fi = F[row, i]
                if not np.isfinite(fi):
                    continue
                while h >= 2:
                    # drop the middle point if it lies on or above the chord
                    cross = (hx[h - 1] - hx[h - 2]) * (fi - hf[h - 2]) - (hf[h - 1] - hf[h - 2]) * (x[i] - hx[h - 2])
                    if cross <= 0.0:
                        h -= 1
                    else:
                        break
                hx[h] = x[i]
                hf[h] = fi
                h += 1
            if h == 0:
                for j in range(M):
                    out[row, j] = -np.inf
                continue
            # maximizer index is nondecreasing in y
            k = 0
            for j in range(M):
                yj = y[j]
                while k + 1 < h and hx[k + 1] * yj - hf[k + 1] >= hx[k] * yj - hf[k]:
                    k += 1
                out[row, j] = hx[k] * yj - hf[k]
        return out


def conjugate_rows(x: np.ndarray, F: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``out[r, j] = max_i (x_i y_j - F[r, i])`` over finite entries.

    ``x`` and ``y`` must be ascending.  Rows with no finite entry give -inf.
    """
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    F = np.ascontiguousarray(F, dtype=float)
    if USE_NUMBA:
        return _conjugate_rows_numba(x, F, y)
    return _conjugate_rows_numpy(x, F, y)


# --------------------------------------------------------------------------
# min-plus (infimal) convolution of lattice tables, n <= 3
# --------------------------------------------------------------------------

def _minplus_numpy(a, b):
    shape = tuple(sa + sb - 1 for sa, sb in zip(a.shape, b.shape))
    out = np.full(shape, np.inf)
    for j in np.ndindex(*b.shape):
        bj = b[j]
        if not np.isfinite(bj):
            continue
        sl = tuple(slice(jj, jj + sa) for jj, sa in zip(j, a.shape))
        np.minimum(out[sl], a + bj, out=out[sl])
    return out


if _HAVE_NUMBA:

    @njit(cache=True)
    def _minplus_1d(a, b):
        na, nb = a.size, b.size
        out = np.full(na + nb - 1, np.inf)
        for j in range(nb):
            bj = b[j]
            if not np.isfinite(bj):
                continue
            for i in range(na):
                v = a[i] + bj
                if v < out[i + j]:
                    out[i + j] = v
        return out

    @njit(cache=True)
    def _minplus_2d(a, b):
        a0, a1 = a.shape
        b0, b1 = b.shape
        out = np.full((a0 + b0 - 1, a1 + b1 - 1), np.inf)
        for j0 in range(b0):
            for j1 in range(b1):
                bj = b[j0, j1]
                if not np.isfinite(bj):
                    continue
                for i0 in range(a0):
                    for i1 in range(a1):
                        v = a[i0, i1] + bj
                        if v < out[i0 + j0, i1 + j1]:
                            out[i0 + j0, i1 + j1] = v
        return out

    @njit(cache=True)
    def _minplus_3d(a, b):
        a0, a1, a2 = a.shape
        b0, b1, b2 = b.shape
        out = np.full((a0 + b0 - 1, a1 + b1 - 1, a2 + b2 - 1), np.inf)
        for j0 in range(b0):
            for j1 in range(b1):
                for j2 in range(b2):
                    bj = b[j0, j1, j2]
                    if not np.isfinite(bj):
                        continue
                    for i0 in range(a0):
                        for i1 in range(a1):
                            for i2 in range(a2):
                                v = a[i0, i1, i2] + bj
                                if v < out[i0 + j0, i1 + j1, i2 + j2]:
                                    out[i0 + j0, i1 + j1, i2 + j2] = v
        return out


def minplus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full min-plus convolution ``out[i] = min_j a[i - j] + b[j]``."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    if a.ndim != b.ndim:
        raise ValueError("minplus operands must have equal rank")
    if USE_NUMBA and a.ndim <= 3:
        return (_minplus_1d, _minplus_2d, _minplus_3d)[a.ndim - 1](a, b)
    return _minplus_numpy(a, b)


# --------------------------------------------------------------------------
# Fourier-slice integrand for central sections of the unit cube
# --------------------------------------------------------------------------

def _sinc_product_numpy(A, s, w):
    out = np.empty(A.shape[0])
    step = max(1, _CHUNK // max(1, A.shape[1] * s.size))
    for lo in range(0, A.shape[0], step):
        blk = A[lo:lo + step]
        prod = np.prod(np.sinc(blk[:, :, None] * s[None, None, :] / (2.0 * np.pi)), axis=1)
        out[lo:lo + step] = prod @ w
    return out


if _HAVE_NUMBA:

    @njit(cache=True)
    def _sinc_product_numba(A, s, w):
        m, k = A.shape
        out = np.zeros(m)
        for i in range(m):
            acc = 0.0
            for q in range(s.size):
                p = 1.0
                for j in range(k):
                    z = 0.5 * A[i, j] * s[q]
                    if z != 0.0:
                        p *= np.sin(z) / z
                acc += w[q] * p
            out[i] = acc
        return out


def sinc_product_quadrature(A: np.ndarray, s: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``out[i] = sum_q w_q prod_j sin(A_ij s_q / 2) / (A_ij s_q / 2)``."""
    A = np.ascontiguousarray(A, dtype=float)
    s = np.ascontiguousarray(s, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    if USE_NUMBA:
        return _sinc_product_numba(A, s, w)
    return _sinc_product_numpy(A, s, w)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
