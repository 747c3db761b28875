import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lcbp import (ball, check_even, check_log_concave, compose_linear, cube, dual_difference, ellipsoid,
                  field_potential, make_characteristic, make_exp_body_norm, make_gaussian, make_gaussian_cov,
                  product, scale_field, total_mass)
from lcbp.fields import check_sup, quadratic_potential, shift_potential

from conftest import rel_err

points2 = arrays(np.float64, (2,), elements=st.floats(-3, 3))
points3 = arrays(np.float64, (3,), elements=st.floats(-3, 3))


def test_gaussian_values():
    assert make_gaussian(3, 1.0)(np.zeros(3)) == 1.0
    assert make_gaussian(2, 1.0)(np.array([1.0, 1.0])) == pytest.approx(math.exp(-1.0))


def test_exp_norm_and_characteristic_values():
    f = make_exp_body_norm(ball(2), 1.0, 1.0)
    assert f(np.array([0.6, 0.8])) == pytest.approx(math.exp(-1.0))
    chi = make_characteristic(ball(2))
    assert chi(np.array([0.5, 0.0])) == 1.0 and chi(np.array([2.0, 0.0])) == 0.0


def test_compose_linear_substitution():
    g = make_gaussian(2, 1.0)
    assert np.allclose(compose_linear(g, np.eye(2))(np.array([[0.3, -1.2]])), g(np.array([[0.3, -1.2]])))
    x = np.array([0.6, 0.8])
    assert compose_linear(g, 2 * np.eye(2))(x) == pytest.approx(math.exp(-2.0))


def test_compose_linear_mass_scales_with_determinant(cfg, rng):
    g = make_gaussian(3, [1.0, 0.7, 1.3])
    T = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
    J = total_mass(compose_linear(g, T), cfg).value
    assert rel_err(J, total_mass(g, cfg).value / abs(np.linalg.det(T))) < 1e-6


def test_scale_field(cfg):
    g = make_gaussian(2, 1.0)
    assert scale_field(g, 1.0) is g
    assert rel_err(total_mass(scale_field(g, 3.0), cfg).value, 3 * 2 * math.pi) < 1e-9


def test_constructor_errors():
    with pytest.raises(ValueError):
        make_exp_body_norm(ball(2), p=0.5)
    with pytest.raises(ValueError):
        make_exp_body_norm(ball(2), p=1.0, c=0.0)
    with pytest.raises(ValueError):
        compose_linear(make_gaussian(2), [[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(ValueError):
        make_gaussian_cov([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        product(make_gaussian(2), make_gaussian(3))


def test_dual_difference_of_even_field_is_unchanged():
    g = make_gaussian(2, [1.0, 2.0])
    d = dual_difference(g)
    x = np.random.default_rng(0).normal(size=(50, 2))
    assert np.allclose(d(x), g(x))


FIELDS = [
    make_gaussian(2, [0.8, 1.4]),
    make_exp_body_norm(ellipsoid(semi_axes=[1.0, 0.5]), 1.5),
    make_exp_body_norm(cube(2), 1.0),
    product(make_gaussian(2, 1.2), make_exp_body_norm(ball(2), 2.0)),
    scale_field(make_gaussian(2, 1.0), 2.5),
]


@pytest.mark.parametrize("f", FIELDS, ids=lambda f: f.name)
def test_field_invariants(f):
    assert check_even(f) == 0.0
    assert check_log_concave(f) < 1e-12
    assert check_sup(f) <= 1e-15
    assert f.value_at_origin == pytest.approx(float(f(np.zeros(2))))


@given(x=points2)
def test_even_fields_are_even(x):
    for f in FIELDS:
        assert f(x) == pytest.approx(f(-x), rel=1e-12, abs=1e-300)


@given(x=points3, y=points3)
def test_midpoint_log_concavity(x, y):
    f = product(make_gaussian(3, [0.9, 1.1, 1.7]), make_exp_body_norm(cube(3), 1.0))
    lhs = f(0.5 * (x + y)) ** 2
    rhs = f(x) * f(y)
    assert lhs >= rhs * (1 - 1e-12)


@given(x=points2, s=st.floats(0.1, 5.0))
def test_values_are_finite_and_bounded(x, s):
    f = scale_field(make_exp_body_norm(ellipsoid(semi_axes=[1.0, 2.0]), 1.0), s)
    v = f(x)
    assert np.isfinite(v) and 0.0 <= v <= f.sup_bound


def test_shifted_gaussian_is_not_even():
    g = make_gaussian_cov(np.eye(2), center=[1.0, 0.0])
    assert check_even(g) > 0.1
    assert not g.is_even


def test_potentials():
    phi = quadratic_potential(np.eye(2))
    assert phi(np.array([1.0, 1.0])) == pytest.approx(1.0)
    assert shift_potential(phi, 2.0)(np.zeros(2)) == pytest.approx(2.0)
    f = phi.to_field(support_radius=8.0)
    assert f(np.array([1.0, 1.0])) == pytest.approx(math.exp(-1.0))
    chi = field_potential(make_characteristic(ball(2)))
    assert chi(np.array([2.0, 0.0])) == math.inf and chi(np.zeros(2)) == 0.0


@given(x=points2, y=points2)
def test_potential_midpoint_convexity(x, y):
    phi = field_potential(make_exp_body_norm(ellipsoid(semi_axes=[1.0, 0.6]), 1.5))
    assert phi(0.5 * (x + y)) <= 0.5 * (phi(x) + phi(y)) + 1e-12
