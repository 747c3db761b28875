import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import gamma

from lcbp import (ball, cube, dual_mixed, dual_mixed_by_limit, ellipsoid, entropy, log_mass_interpolation,
                  make_characteristic, make_exp_body_norm, make_gaussian, marginal, parallel_section, radon,
                  total_mass)
from lcbp.fields import CallableField
from lcbp.functionals import DegenerateMassError, SubspaceFrame

from conftest import rel_err


def unit_ball_volume(n):
    return math.pi ** (n / 2) / gamma(n / 2 + 1)


@pytest.mark.parametrize("n", [2, 3])
def test_gaussian_mass(n):
    assert rel_err(total_mass(make_gaussian(n)).value, (2 * math.pi) ** (n / 2)) < 1e-6


@pytest.mark.parametrize("n,p,c", [(2, 1.0, 1.0), (3, 1.0, 2.0), (3, 2.0, 0.5)])
def test_exp_ball_norm_mass(n, p, c):
    f = make_exp_body_norm(ball(n), p, c)
    exact = gamma(1 + n / p) * c ** (-n / p) * unit_ball_volume(n)
    assert rel_err(total_mass(f).value, exact) < 1e-6


def test_gaussian_entropy():
    e = entropy(make_gaussian(2))
    exact = -2 * math.pi - 2 * math.pi * math.log(2 * math.pi)
    assert rel_err(e.value, exact) < 1e-6
    assert e.mass == pytest.approx(2 * math.pi, rel=1e-7)


def test_exp_norm_entropy_and_selfdual():
    n = 3
    f = make_exp_body_norm(ball(n))
    J = 6 * unit_ball_volume(n)  # Gamma(4) |B3| = 8 pi
    assert rel_err(entropy(f).value, -J * (n + math.log(J))) < 1e-6
    assert rel_err(dual_mixed(f, f).value, n * J) < 1e-6


def test_entropy_of_characteristic_function():
    # f log f vanishes, so Ent = -V log V
    K = cube(2, 0.5)
    assert entropy(make_characteristic(K)).value == pytest.approx(0.0, abs=1e-9)
    K = ball(3)
    V = unit_ball_volume(3)
    assert rel_err(entropy(make_characteristic(K)).value, -V * math.log(V)) < 1e-6


def test_degenerate_mass_rejected():
    tiny = make_characteristic(ball(2, 1e-8))
    with pytest.raises(DegenerateMassError):
        entropy(tiny)


def test_gaussian_sections_and_marginal():
    f = make_gaussian(3)
    for t in (0.0, 0.7, 2.0):
        res = parallel_section(f, [1.0, 2.0, -0.5], t)
        assert rel_err(res.value, 2 * math.pi * math.exp(-t * t / 2)) < 1e-6
    F = SubspaceFrame.from_vectors([[1.0, 1.0, 0.0]])
    assert F.gram_error() < 1e-14
    assert rel_err(marginal(f, F, [0.8]).value, 2 * math.pi * math.exp(-0.32)) < 1e-6
    F2 = SubspaceFrame.from_vectors([[1.0, 0, 0], [0, 1.0, 0]])
    assert rel_err(marginal(f, F2, [0.3, -0.4]).value, math.sqrt(2 * math.pi) * math.exp(-0.125)) < 1e-6


def test_subspace_frame_validation():
    with pytest.raises(ValueError):
        SubspaceFrame.from_vectors([[1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(ValueError):
        SubspaceFrame.from_vectors(np.eye(3))


def test_section_of_ball_indicator_is_disc_area():
    f = make_characteristic(ball(3))
    t = 0.6
    assert rel_err(parallel_section(f, [0, 0, 1.0], t).value, math.pi * (1 - t * t)) < 1e-6
    assert parallel_section(f, [0, 0, 1.0], 1.5).value == 0.0


@given(lam=st.floats(0.2, 5.0), r=st.floats(-1.0, 1.0))
def test_radon_homogeneity(lam, r):
    f = make_exp_body_norm(ellipsoid(semi_axes=[1.0, 0.6]), 1.0)
    x = np.array([0.6, 0.8])
    base = radon(f, x, r).value
    assert radon(f, lam * x, lam * r).value == pytest.approx(base / lam, rel=1e-7)


def test_radon_rejects_zero_direction():
    with pytest.raises(ValueError):
        radon(make_gaussian(2), [0.0, 0.0], 0.0)


def test_dual_mixed_gaussians_and_limit_route():
    f, g = make_gaussian(2), make_gaussian(2, 2.0)
    exact = math.pi / 2  # int |x|^2/8 exp(-|x|^2/2)
    assert rel_err(dual_mixed(f, g).value, exact) < 1e-6
    lim = dual_mixed_by_limit(f, g)
    assert lim.monotone
    assert rel_err(lim.value, exact) < 1e-6
    with pytest.raises(ValueError):
        dual_mixed_by_limit(f, g, t_sequence=[1e-3, 1e-2])


def test_dual_mixed_infinite_cases():
    # psi = +inf on a set charged by f
    assert math.isinf(dual_mixed(make_gaussian(2), make_characteristic(ball(2, 0.5))).value)
    # psi grows faster than f decays
    f = make_exp_body_norm(ball(2))
    g = CallableField(2, lambda x: np.exp(-np.exp(np.linalg.norm(x, axis=-1))), support_radius=4.0,
                      sup_bound=1.0, potential=lambda x: np.exp(np.linalg.norm(x, axis=-1)))
    res = dual_mixed(f, g)
    assert math.isinf(res.value) and res.converged
    # finite when f lives inside the body of g
    inner = dual_mixed(make_characteristic(ball(2, 0.5)), make_characteristic(ball(2)))
    assert inner.value == 0.0


def test_dual_mixed_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        dual_mixed(make_gaussian(2), make_gaussian(3))


def test_log_mass_interpolation_is_convex_with_correct_ends():
    f, g = make_gaussian(2), make_exp_body_norm(ellipsoid(semi_axes=[1.5, 0.5]))
    ts = np.linspace(0, 1, 11)
    L = log_mass_interpolation(f, g, ts)
    assert L[0] == pytest.approx(math.log(2 * math.pi), rel=1e-6)
    assert L[-1] == pytest.approx(math.log(2 * 0.75 * math.pi), rel=1e-6)
    assert np.all(np.diff(L, 2) >= -1e-9)
