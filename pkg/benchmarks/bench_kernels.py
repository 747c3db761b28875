"""Time the numba and numpy paths of the hot kernels on representative sizes.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-repeat time of each path, the
speed-up, and the max abs difference between the two results.
"""

import argparse
import time

import numpy as np

from lcbp import _kernels as K


def best_of(fn, repeat):
    fn()  # warm-up (includes JIT compilation)
    ts = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        ts.append(time.perf_counter() - t)
    return min(ts), out


def cases(rng):
    x = np.linspace(-3, 3, 257)
    F = 0.5 * (x[None, :] ** 2) * rng.uniform(0.5, 2.0, (257, 1))
    y = np.linspace(-6, 6, 257)
    yield ("conjugate_rows 257x257", lambda: K._conjugate_rows_numba(x, F, y),
           lambda: K._conjugate_rows_numpy(x, F, y))
    a1, b1 = rng.uniform(0, 1, 2001), rng.uniform(0, 1, 2001)
    yield "minplus 1d 2001", lambda: K._minplus_1d(a1, b1), lambda: K._minplus_numpy(a1, b1)
    a2, b2 = rng.uniform(0, 1, (65, 65)), rng.uniform(0, 1, (65, 65))
    yield "minplus 2d 65^2", lambda: K._minplus_2d(a2, b2), lambda: K._minplus_numpy(a2, b2)
    a3, b3 = rng.uniform(0, 1, (13, 13, 13)), rng.uniform(0, 1, (13, 13, 13))
    yield "minplus 3d 13^3", lambda: K._minplus_3d(a3, b3), lambda: K._minplus_numpy(a3, b3)
    A = rng.normal(size=(600, 10))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    s = np.linspace(1e-3, 400, 4000)
    w = np.full(s.size, s[1] - s[0])
    yield ("sinc_product 600 dirs x 4000 nodes", lambda: K._sinc_product_numba(A, s, w),
           lambda: K._sinc_product_numpy(A, s, w))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K._HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':38s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speed-up':>9s} {'max |diff|':>11s}")
    for name, fast, slow in cases(rng):
        t1, r1 = best_of(fast, args.repeat)
        t2, r2 = best_of(slow, args.repeat)
        finite = np.isfinite(r1) & np.isfinite(r2)
        diff = float(np.max(np.abs(r1[finite] - r2[finite]))) if finite.any() else 0.0
        print(f"{name:38s} {t1:11.5f} {t2:11.5f} {t2 / t1:9.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
