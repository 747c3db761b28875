import json
import math

import numpy as np
import pytest
from scipy.special import gammaln

from lcbp import (ball, bp_check, bp_counterexample_cube_ball, closed_form_oracle, demo_noneven_necessity,
                  make_exp_body_norm, make_gaussian, run_suite, SUITES)
from lcbp.experiments import (counterexample_ball_radius, cube_section, cube_section_exact,
                              cube_section_monte_carlo, random_even_field, shifted_gaussian)
from lcbp.functionals import dual_mixed, entropy, parallel_section, total_mass

from conftest import rel_err


def log_ball_volume(n):
    return 0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1)


def test_closed_form_oracle_values():
    cf = closed_form_oracle(ball(3), 1.0)
    assert cf.J == pytest.approx(8 * math.pi, rel=1e-6)
    assert cf.selfdual == pytest.approx(24 * math.pi, rel=1e-6)
    assert cf.section([0, 0, 1.0]) == pytest.approx(2 * math.pi, rel=1e-6)
    with pytest.raises(ValueError):
        closed_form_oracle(ball(2), 0.0)


@pytest.mark.parametrize("n,p,a", [(2, 1.0, 0.5), (3, 2.0, 2.0)])
def test_closed_form_oracle_matches_quadrature(n, p, a):
    cf = closed_form_oracle(ball(n), a, p)
    f = make_exp_body_norm(ball(n), p, a ** (-p))
    assert rel_err(total_mass(f).value, cf.J) < 1e-6
    assert rel_err(dual_mixed(f, f).value, cf.selfdual) < 1e-6
    assert rel_err(entropy(f).value, cf.Ent) < 1e-6
    u = np.ones(n) / math.sqrt(n)
    assert rel_err(parallel_section(f, u, 0.0).value, cf.section(u)) < 1e-6


def test_cube_sections():
    assert cube_section_exact([1.0, 0, 0]) == pytest.approx(1.0)
    assert cube_section_exact([1.0, 1.0, 0, 0]) == pytest.approx(math.sqrt(2))
    # the diagonal section of the 3-cube is a regular hexagon with side 1/sqrt(2)
    assert cube_section_exact([1.0, 1.0, 1.0]) == pytest.approx(3 * math.sqrt(3) / 4)
    rng = np.random.default_rng(3)
    U = rng.standard_normal((4, 10))
    vals, errs = cube_section(U)
    exact = [cube_section_exact(u) for u in U]
    assert np.allclose(vals, exact, atol=1e-8)
    assert np.all(errs < 1e-8)
    mc, se = cube_section_monte_carlo(U[0], samples=100_000)
    assert abs(mc - exact[0]) < 5 * se


def test_counterexample_radius_is_pinned():
    r = counterexample_ball_radius(10)
    assert r == pytest.approx(0.9101920491517972, rel=1e-14)
    # omega_9 r^9 = sqrt(2)
    assert math.exp(log_ball_volume(9) + 9 * math.log(r)) == pytest.approx(math.sqrt(2), rel=1e-14)
    vol = math.exp(log_ball_volume(10) + 10 * math.log(r))
    assert vol == pytest.approx(0.9951727879465111, rel=1e-14)


def test_counterexample_at_n10():
    v, s = bp_counterexample_cube_ball(10, 500)
    assert v.domination and not v.mass_ordered
    assert s["directions"] >= 500
    assert s["max_cube_section"] <= math.sqrt(2) + 1e-3
    assert s["margin"] > 10 * s["ball_volume_error"]
    with pytest.raises(ValueError):
        bp_counterexample_cube_ball(9)


def test_bp_check_orders_nested_gaussians():
    v = bp_check(make_gaussian(2), make_gaussian(2, 1.5))
    assert v.domination and v.mass_ordered and v.selfdual_ordered and v.entropy_ordered
    assert v.consistent_with_theorem
    assert v.worst_ratio == pytest.approx(1 / 1.5, rel=1e-6)
    w = bp_check(make_gaussian(2, 1.5), make_gaussian(2))
    assert not w.domination and w.consistent_with_theorem


def test_bp_check_rejects_bad_inputs():
    with pytest.raises(ValueError, match="not even"):
        bp_check(shifted_gaussian(2), make_gaussian(2))
    with pytest.raises(ValueError, match="dimension mismatch"):
        bp_check(make_gaussian(2), make_gaussian(3))


def test_noneven_construction():
    reps = demo_noneven_necessity(shifted_gaussian(2, 0.8))
    assert [r.name for r in reps] == ["noneven-eps-below-one", "noneven-positive-selfdual",
                                      "noneven-smaller-sections", "noneven-larger-selfdual"]
    assert all(r.passed for r in reps), [r.to_dict() for r in reps]
    with pytest.raises(ValueError, match="non-even"):
        demo_noneven_necessity(make_gaussian(2))


def test_random_even_fields_are_even_and_seeded():
    for seed in range(5):
        f = random_even_field(3, np.random.default_rng(seed))
        g = random_even_field(3, np.random.default_rng(seed))
        x = np.random.default_rng(99).standard_normal((20, 3))
        assert f.is_even and np.allclose(f(x), f(-x)) and np.array_equal(f(x), g(x))


def test_cheap_suites_are_deterministic_and_pass():
    for name in ("moments", "inclusion"):
        a = [r.to_dict() for r in run_suite(name, seed=7)]
        b = [r.to_dict() for r in run_suite(name, seed=7)]
        assert json.dumps(a) == json.dumps(b)
        assert all(r["pass"] for r in a)


def test_unknown_suite():
    assert "bp-positive" in SUITES
    with pytest.raises(ValueError, match="unknown suite"):
        run_suite("nope")


def test_grid_sections_fold_antipodes_for_even_fields(cfg):
    from lcbp.experiments import grid_sections
    from lcbp.quadrature import integrate_hyperplane
    U = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 0.6, 0.8], [0, -0.6, -0.8], [0.6, 0.0, -0.8]])
    f = random_even_field(3, np.random.default_rng(5))
    vals, errs = grid_sections(f, U, cfg)
    direct = [integrate_hyperplane(f, u, 0.0, cfg).value for u in U]
    assert vals[0] == vals[1] and vals[2] == vals[3]
    assert np.allclose(vals, direct, rtol=1e-6) and np.all(errs >= 0)
    g = shifted_gaussian(3, 0.5)
    assert np.allclose(grid_sections(g, U, cfg)[0], [integrate_hyperplane(g, u, 0.0, cfg).value for u in U])
