"""Quadrature configuration and result records shared by every integral."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

#: Relative level below which a field is treated as zero when choosing
#: truncation radii; ``log(1/TRUNCATION_EPS)`` is the decay budget along a ray.
TRUNCATION_EPS = 1e-12

_DEFAULT_MAX_EVALS = 200_000_000


def default_rel_tol(n: int) -> float:
    if n <= 3:
        return 1e-6
    if n == 4:
        return 1e-4
    return 1e-3


def _env_max_evals() -> int | None:
    raw = os.environ.get("LCBP_MAX_EVALS")
    if not raw:
        return None
    return int(float(raw))


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and budgets for the quadrature engines.

    ``rel_tol=None`` picks the dimension-dependent default (1e-6 for n<=3,
    1e-4 for n=4, 1e-3 above).  The ``LCBP_MAX_EVALS`` environment variable
    caps ``max_evals``.
    """

    rel_tol: float | None = None
    abs_tol: float = 1e-12
    max_evals: int = _DEFAULT_MAX_EVALS
    seed: int = 0
    radial_scheme: str = "gk21"
    sphere_scheme: str = "auto"

    def __post_init__(self):
        if self.rel_tol is not None and not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_evals <= 0:
            raise ValueError("max_evals must be positive")
        if self.radial_scheme not in ("gk21",):
            raise ValueError(f"unknown radial scheme {self.radial_scheme!r}")
        if self.sphere_scheme not in ("auto", "product", "qmc"):
            raise ValueError(f"unknown sphere scheme {self.sphere_scheme!r}")

    def tol(self, n: int) -> float:
        return self.rel_tol if self.rel_tol is not None else default_rel_tol(n)

    @property
    def budget(self) -> int:
        cap = _env_max_evals()
        return self.max_evals if cap is None else min(self.max_evals, cap)

    def with_(self, **changes) -> "QuadratureConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_evals": self.max_evals,
            "seed": self.seed,
            "radial_scheme": self.radial_scheme,
            "sphere_scheme": self.sphere_scheme,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuadratureConfig":
        known = {"rel_tol", "abs_tol", "max_evals", "seed", "radial_scheme", "sphere_scheme"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown quadrature keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class IntegralResult:
    value: float
    error_estimate: float
    evals_used: int
    converged: bool
    info: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "error_estimate": self.error_estimate,
            "evals": self.evals_used,
            "converged": self.converged,
        }


class QuadratureError(RuntimeError):
    """Raised when a caller demands convergence the engine could not reach."""
