import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lcbp import QuadratureConfig, make_characteristic, make_gaussian, ball
from lcbp.quadrature import (ball_volume, direction_grid, integrate_hyperplane, integrate_radial, integrate_sphere,
                             integrate_space, orthonormal_complement, quasi_random_directions, ray_integrate,
                             sphere_area)

from conftest import rel_err


@pytest.mark.parametrize("n, area", [(2, 2 * math.pi), (3, 4 * math.pi), (4, 2 * math.pi**2)])
def test_sphere_area_closed_form(n, area):
    assert sphere_area(n) == pytest.approx(area, rel=1e-14)
    assert ball_volume(n) == pytest.approx(area / n, rel=1e-14)


def test_radial_integrals(cfg):
    assert integrate_radial(lambda r: np.exp(-r), cfg, decay_rate=1.0).value == pytest.approx(1.0, rel=1e-9)
    assert integrate_radial(lambda r: r**2 * np.exp(-r), cfg, decay_rate=0.5).value == pytest.approx(2.0, rel=1e-9)
    step = integrate_radial(lambda r: (r <= 0.7).astype(float), cfg, radius=2.0, breaks=[0.7])
    assert step.value == pytest.approx(0.7, rel=1e-9)


@pytest.mark.parametrize("n, h, exact", [
    (2, lambda u: np.ones(len(u)), 2 * math.pi),
    (3, lambda u: np.ones(len(u)), 4 * math.pi),
    (3, lambda u: u[:, 0] ** 2, 4 * math.pi / 3),
    (4, lambda u: u[:, 3] ** 2, math.pi**2 / 2),
])
def test_sphere_integrals(cfg, n, h, exact):
    r = integrate_sphere(n, h, cfg)
    assert r.converged
    assert rel_err(r.value, exact) < 1e-9


def test_sphere_kinked_integrand(cfg):
    # |u_2| on S^2 integrates to 2 pi; the kink along the equator u_2 = 0 is
    # not aligned with the polar grid, so this exercises the adaptive panels
    r = integrate_sphere(3, lambda u: np.abs(u[:, 1]), cfg)
    assert rel_err(r.value, 2 * math.pi) < 1e-6
    c = integrate_sphere(2, lambda u: np.abs(u[:, 0] + 0.3 * u[:, 1]), cfg)
    assert rel_err(c.value, 4 * math.hypot(1.0, 0.3)) < 1e-6


@given(c=st.floats(0.1, 10.0), n=st.sampled_from([2, 3, 4]))
def test_constant_on_sphere_is_area(c, n):
    r = integrate_sphere(n, lambda u: np.full(len(u), c), QuadratureConfig())
    assert rel_err(r.value, c * sphere_area(n)) < 1e-10


def test_direction_grids_are_unit_and_weighted():
    for n, scheme in [(2, "auto"), (3, "auto"), (4, "auto"), (6, "auto"), (3, "qmc")]:
        g = direction_grid(n, 1, scheme, seed=3)
        assert np.allclose(np.linalg.norm(g.nodes, axis=1), 1.0)
        assert np.all(g.weights > 0)
        assert g.weights.sum() == pytest.approx(sphere_area(n), rel=1e-12)


def test_qmc_directions_deterministic():
    a = quasi_random_directions(5, 64, seed=7)
    b = quasi_random_directions(5, 64, seed=7)
    c = quasi_random_directions(5, 64, seed=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_orthonormal_complement():
    u = np.array([1.0, 2.0, -2.0]) / 3.0
    Q = orthonormal_complement(u)
    assert Q.shape == (3, 2)
    assert np.allclose(Q.T @ Q, np.eye(2))
    assert np.allclose(Q.T @ u, 0.0)


def test_ray_integrate_singular_power():
    # int_0^1 r^{-1/2} dr = 2 handled through the substitution
    rr = ray_integrate(lambda idx, r: np.ones_like(r), np.ones((3, 1)), -0.5, 1e-10, 1e-14, 10**7)
    assert np.allclose(rr.values, 2.0, rtol=1e-9)


def test_hyperplane_and_space_integrals(cfg):
    g3 = make_gaussian(3, 1.0)
    assert rel_err(integrate_hyperplane(g3, [0, 0, 1], 0.0, cfg).value, 2 * math.pi) < 1e-8
    chi = make_characteristic(ball(3))
    assert rel_err(integrate_hyperplane(chi, [1, 0, 0], 0.0, cfg).value, math.pi) < 1e-8
    assert integrate_hyperplane(chi, [1, 0, 0], 2.0, cfg).value == 0.0
    assert rel_err(integrate_space(make_gaussian(2, 1.0), cfg).value, 2 * math.pi) < 1e-9
    assert rel_err(integrate_space(chi, cfg).value, 4 * math.pi / 3) < 1e-9


def test_budget_cap_from_environment(monkeypatch):
    monkeypatch.setenv("LCBP_MAX_EVALS", "500")
    cfg = QuadratureConfig()
    assert cfg.budget == 500
    for n in (2, 3, 4):
        r = integrate_space(make_gaussian(n, 1.0), cfg)
        assert not r.converged
        assert math.isnan(r.value)


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(sphere_scheme="spiral")
    with pytest.raises(ValueError):
        QuadratureConfig.from_dict({"rel_tol": 1e-6, "bogus": 1})
    assert QuadratureConfig().tol(2) == 1e-6 and QuadratureConfig().tol(4) == 1e-4
