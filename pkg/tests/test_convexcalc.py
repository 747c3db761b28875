import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lcbp import (ball, field_potential, GridPotential, harmonic_combination, harmonic_identity_deviation,
                  infimal_convolution, legendre_transform, make_exp_body_norm, right_scalar_mult, tabulate)
from lcbp import _kernels
from lcbp.convexcalc import from_csv, resample, to_csv
from lcbp.fields import quadratic_potential


def quad_grid(n=1, half=3.0, m=121, a=1.0):
    box = np.tile([-half, half], (n, 1))
    return tabulate(lambda x: 0.5 * a * np.sum(x * x, axis=1), box, m)


def inner(g, frac=0.5):
    sl = tuple(slice(int(m * (1 - frac) / 2), m - int(m * (1 - frac) / 2)) for m in g.resolution)
    return g.values[sl], [ax[s] for ax, s in zip(g.axes(), sl)]


def test_quadratic_is_self_conjugate():
    for n, m in ((1, 241), (2, 61)):
        g = legendre_transform(quad_grid(n, m=m))
        vals, axes = inner(g)
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        exact = 0.5 * np.sum(pts**2, axis=-1)
        h = g.spacing.max()
        assert np.max(np.abs(vals - exact)) < h**2


def test_norm_conjugate_is_indicator_of_unit_ball():
    x = np.linspace(-3, 3, 301)
    phi = GridPotential(np.array([[-3.0, 3.0]]), np.abs(x))
    g = legendre_transform(phi, box=[[-2.0, 2.0]], resolution=401)
    y = g.axes()[0]
    inside = np.abs(y) <= 1.0
    assert np.max(np.abs(g.values[inside])) < 1e-12
    # the exact conjugate of the truncated table is 3(|y| - 1) outside the unit ball
    assert np.allclose(g.values[~inside], 3.0 * (np.abs(y[~inside]) - 1.0))


def test_biconjugate_recovers_convex_table():
    phi = tabulate(field_potential(make_exp_body_norm(ball(1), 2.0)), [[-2.0, 2.0]], 201)
    back = legendre_transform(legendre_transform(phi, margin=0.0), phi.box, phi.resolution)
    assert np.max(np.abs(back.values - phi.values)) < 1e-10


def test_envelope_and_brute_agree(rng):
    F = np.cumsum(np.cumsum(rng.uniform(0, 1, (3, 40)), axis=1), axis=1) * 0.01
    x = np.linspace(-1, 1, 40)
    phi = GridPotential(np.array([[-1.0, 1.0]]), F[0])
    a = legendre_transform(phi, method="envelope")
    b = legendre_transform(phi, method="brute")
    assert np.allclose(a.values, b.values, atol=1e-12)


def test_infimal_convolution_identities():
    q = quad_grid(1, half=2.0, m=81)
    point = GridPotential(np.array([[0.0, 0.0]]), np.array([0.0]))
    same = infimal_convolution(q, point)
    assert np.allclose(same.values, q.values) and np.allclose(same.box, q.box)
    conv = infimal_convolution(q, q)
    y = conv.axes()[0]
    # odd lattice sums cannot split evenly, costing exactly h^2/4
    assert np.max(np.abs(conv.values - 0.25 * y**2)) <= 0.25 * conv.spacing[0] ** 2 + 1e-12
    via = infimal_convolution(q, q, method="conjugate")
    mid = np.abs(y) <= 2.0
    assert np.max(np.abs(via.values[mid] - conv.values[mid])) < 5 * conv.spacing[0] ** 2


def test_infimal_convolution_mismatch():
    with pytest.raises(ValueError, match="box/resolution mismatch"):
        infimal_convolution(quad_grid(1, m=81), quad_grid(1, m=61))


def test_right_scalar_mult():
    q = quad_grid(1, m=61)
    assert right_scalar_mult(q, 1.0).allclose(q)
    x = np.linspace(-3, 3, 61)
    absg = GridPotential(np.array([[-3.0, 3.0]]), np.abs(x))
    t = 2.5
    scaled = right_scalar_mult(absg, t)
    # 1-homogeneous: same function on the larger box
    assert np.allclose(scaled.values, np.abs(scaled.axes()[0]))
    # (phi t)* = t phi* on a shared dual lattice
    box = [[-0.8, 0.8]]
    lhs = legendre_transform(right_scalar_mult(q, t), box=box, resolution=33)
    rhs = legendre_transform(q, box=box, resolution=33)
    assert np.allclose(lhs.values, t * rhs.values, atol=1e-12)
    with pytest.raises(ValueError):
        right_scalar_mult(q, 0.0)


def test_harmonic_combination():
    q = quad_grid(1, m=41)
    assert harmonic_combination(q, q, 1e-14).allclose(q)
    assert np.allclose(harmonic_combination(q, q, 2.0).values, 3.0 * q.values)
    p1, p2 = quadratic_potential(np.eye(2)), quadratic_potential(2 * np.eye(2))
    h = harmonic_combination(p1, p2, 0.5)
    assert h(np.array([1.0, 0.0])) == pytest.approx(0.5 + 0.5)
    with pytest.raises(ValueError):
        harmonic_combination(q, quad_grid(2, m=11), 1.0)


def test_harmonic_identity_converges():
    phi, psi = quad_grid(1, m=41), quad_grid(1, m=41, a=2.0)
    coarse = harmonic_identity_deviation(phi, psi, 0.7)
    phi, psi = quad_grid(1, m=161), quad_grid(1, m=161, a=2.0)
    fine = harmonic_identity_deviation(phi, psi, 0.7)
    assert fine < coarse and fine < 1e-3


@given(slope=st.floats(0.2, 3.0), c=st.floats(-2, 2))
def test_fenchel_young(slope, c):
    x = np.linspace(-2, 2, 81)
    phi = GridPotential(np.array([[-2.0, 2.0]]), 0.5 * slope * (x - 0.1 * c) ** 2 + c)
    g = legendre_transform(phi)
    y = g.axes()[0]
    gap = phi.values[:, None] + g.values[None, :] - np.multiply.outer(x, y)
    assert gap.min() >= -1e-12


@given(seed=st.integers(0, 10**6))
def test_conjugate_is_midpoint_convex(seed):
    r = np.random.default_rng(seed)
    vals = r.normal(size=64)  # arbitrary, non-convex table
    g = legendre_transform(GridPotential(np.array([[-1.0, 1.0]]), vals), resolution=63)
    v = g.values
    assert np.all(v[2:] - 2 * v[1:-1] + v[:-2] >= -1e-9)


def test_csv_round_trip(tmp_path):
    q = quad_grid(2, m=9)
    vals = q.values.copy()
    vals[0, 0] = np.inf
    g = GridPotential(q.box, vals)
    back = from_csv(to_csv(g))
    assert np.array_equal(back.values, g.values) and np.allclose(back.box, g.box)


def test_resample_and_validation():
    q = quad_grid(1, m=81)
    x = np.linspace(-1, 1, 21)[:, None]
    assert np.allclose(resample(q, x), 0.5 * x[:, 0] ** 2, atol=1e-3)
    assert np.isinf(resample(q, [[5.0]])).all()
    with pytest.raises(ValueError, match="improper"):
        GridPotential(np.array([[0.0, 1.0]]), np.full(5, np.inf))
    with pytest.raises(ValueError):
        GridPotential(np.array([[0.0, 1.0]]), np.array([0.0, np.nan]))
    with pytest.raises(ValueError):
        legendre_transform(GridPotential(np.tile([-1.0, 1.0], (4, 1)), np.zeros((3, 3, 3, 3))))


@pytest.mark.skipif(not _kernels._HAVE_NUMBA, reason="numba unavailable")
def test_numba_and_numpy_kernels_agree(rng):
    x = np.linspace(-2, 2, 50)
    F = rng.uniform(0, 1, (7, 50))
    y = np.linspace(-3, 3, 45)
    assert np.allclose(_kernels._conjugate_rows_numba(x, F, y), _kernels._conjugate_rows_numpy(x, F, y))
    a, b = rng.uniform(0, 1, (6, 7)), rng.uniform(0, 1, (5, 4))
    b[1, 2] = np.inf
    assert np.array_equal(_kernels._minplus_2d(a, b), _kernels._minplus_numpy(a, b))
    A = rng.normal(size=(4, 6))
    s = np.linspace(0.01, 30, 200)
    w = np.full(200, s[1] - s[0])
    assert np.allclose(_kernels._sinc_product_numba(A, s, w), _kernels._sinc_product_numpy(A, s, w))
