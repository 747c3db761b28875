"""Numerical geometry of log-concave functions: total mass, entropy, sections,
intersection functions, Ball bodies, dual mixed volumes and Busemann-Petty
comparisons, with grid Legendre-Fenchel calculus and verification suites."""

from .config import IntegralResult, QuadratureConfig, QuadratureError
from .convexcalc import (GridPotential, harmonic_combination, harmonic_identity_deviation, infimal_convolution,
                         legendre_transform, right_scalar_mult, tabulate)
from .experiments import (BPVerdict, bp_check, bp_counterexample_cube_ball, closed_form_oracle,
                          demo_noneven_necessity, run_suite, SUITES)
from .fields import (ConvexPotential, ScalarField, check_even, check_log_concave, compose_linear, dual_difference,
                     field_potential, make_characteristic, make_exp_body_norm, make_gaussian, make_gaussian_cov,
                     product, scale_field)
from .functionals import (dual_mixed, dual_mixed_by_limit, entropy, log_mass_interpolation, marginal,
                          parallel_section, radon, total_mass)
from .geometry import (StarBody, ball, central_section_volume, cube, dual_mixed_volume, ellipsoid,
                       harmonic_p_combination, linear_image, radial_table, star_body, volume)
from .intersection import (ball_body, busemann_constant, gl_transform_check, if_via_ball_body, intersection_body,
                           intersection_function, intersection_mass, is_intersection_function_n3, spherical_radon,
                           negative_harmonic_fixture, spherical_radon_inverse_n3)
from .reports import InequalityReport
from .scene import Scene, SceneError, parse_scene, serialize

__version__ = "0.1.0"
