import math

import numpy as np
import pytest
from scipy.special import gamma

from lcbp import (ball, ball_body, busemann_constant, ellipsoid, gl_transform_check, if_via_ball_body,
                  intersection_body, intersection_function, intersection_mass, is_intersection_function_n3,
                  make_characteristic, make_exp_body_norm, make_gaussian, negative_harmonic_fixture,
                  spherical_radon, spherical_radon_inverse_n3)
from lcbp.intersection import SphericalFunction, radon_multiplier

from conftest import rel_err

DIRS3 = np.array([[1.0, 0, 0], [0, 0.6, 0.8], [0.3, -0.4, 0.866]])
DIRS3 /= np.linalg.norm(DIRS3, axis=1, keepdims=True)


def test_intersection_function_closed_forms():
    x = np.array([[0.5, 0.0, 0.0], [0.2, -1.0, 0.4]])
    r = np.linalg.norm(x, axis=1)
    got = intersection_function(make_characteristic(ball(3)), x)
    assert np.allclose(got, np.exp(-r / math.pi), rtol=1e-6)
    got = intersection_function(make_gaussian(3), x)
    assert np.allclose(got, np.exp(-r / (2 * math.pi)), rtol=1e-6)
    assert intersection_function(make_gaussian(3), np.zeros(3)) == 1.0


def test_intersection_mass_of_ball_indicator():
    assert rel_err(intersection_mass(make_characteristic(ball(3))).value, 8 * math.pi**4) < 1e-6


def test_busemann_constant_is_attained_by_ellipsoids():
    assert busemann_constant(3) == pytest.approx(4.5 * math.pi**2, rel=1e-14)
    E = ellipsoid(semi_axes=[1.3, 0.8, 0.6])
    V = 4 / 3 * math.pi * 1.3 * 0.8 * 0.6
    assert rel_err(intersection_mass(make_characteristic(E)).value, busemann_constant(3) * V**2) < 1e-5


def test_intersection_body_of_ball():
    for method in ("radon", "section"):
        IB = intersection_body(ball(3), method=method)
        assert np.allclose(IB.radial(DIRS3), math.pi, rtol=1e-6)
    with pytest.raises(ValueError):
        intersection_body(ball(3), method="other")


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_ball_bodies(p):
    K = ball_body(make_characteristic(ball(3)), p)
    assert np.allclose(K.radial(DIRS3), 1.0, rtol=1e-7)
    K = ball_body(make_gaussian(3), p)
    exact = (p * 2 ** (p / 2 - 1) * gamma(p / 2)) ** (1 / p)
    assert np.allclose(K.radial(DIRS3), exact, rtol=1e-7)


def test_ball_body_needs_positive_value_at_origin():
    with pytest.raises(ValueError):
        ball_body(make_gaussian(2), 0.0)


def test_intersection_function_via_ball_body():
    f = make_exp_body_norm(ellipsoid(semi_axes=[1.0, 0.7, 0.5]))
    x = np.array([[0.4, 0.1, -0.3], [0.0, 1.0, 0.0]])
    direct = intersection_function(f, x)
    via = if_via_ball_body(f, x)
    assert np.allclose(direct, via, rtol=1e-6)


def test_gl_equivariance():
    T = np.array([[1.2, 0.3, 0.0], [0.0, 0.9, -0.2], [0.1, 0.0, 0.7]])
    rep = gl_transform_check(make_gaussian(3), T, DIRS3 * 0.8)
    assert rep.passed, rep
    with pytest.raises(ValueError, match="singular"):
        gl_transform_check(make_gaussian(3), np.zeros((3, 3)), DIRS3)


def test_spherical_radon_and_inverse():
    const = spherical_radon(lambda u: np.ones(len(u)), [0, 0, 1.0])
    assert const == pytest.approx(2 * math.pi, rel=1e-10)
    assert radon_multiplier(2) == pytest.approx(-math.pi)

    def g(u):
        return 1.0 + u[:, 2] ** 2

    h, resid = spherical_radon_inverse_n3(g, lmax=8)
    assert resid < 1e-10
    for u in DIRS3:
        assert spherical_radon(h, u) == pytest.approx(g(u[None])[0], rel=1e-8)
    with pytest.raises(ValueError, match="not even"):
        spherical_radon_inverse_n3(lambda u: u[:, 0], lmax=4)
    with pytest.raises(ValueError):
        spherical_radon_inverse_n3(g, lmax=100)


def test_membership_verdicts():
    yes = is_intersection_function_n3(make_characteristic(ball(3)), lmax=8)
    assert yes.verdict == "yes"
    no = is_intersection_function_n3(negative_harmonic_fixture(), lmax=8)
    assert no.verdict == "no"
    assert no.normalized_min == pytest.approx(-0.6, abs=1e-3)
    with pytest.raises(ValueError, match="even"):
        is_intersection_function_n3(make_gaussian(3, center=[0.3, 0, 0]))
    with pytest.raises(ValueError):
        negative_harmonic_fixture(degree=3)
