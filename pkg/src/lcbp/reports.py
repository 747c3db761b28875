"""Inequality report records shared by the verification operations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def _clean(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "+inf" if x > 0 else "-inf"
        return x
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item"):
        return _clean(x.item())
    return x


@dataclass
class InequalityReport:
    """lhs <= rhs check.  ``margin = rhs - lhs``; passes when margin >= -tolerance,
    and for equality cases additionally when |margin| <= tolerance."""

    name: str
    lhs: float
    rhs: float
    tolerance: float
    equality_expected: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return float(self.rhs - self.lhs)

    @property
    def passed(self) -> bool:
        m = self.margin
        if math.isnan(m):
            return False
        if self.equality_expected:
            return abs(m) <= self.tolerance
        return m >= -self.tolerance

    def to_dict(self) -> dict:
        return _clean({
            "name": self.name,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "margin": self.margin,
            "tolerance": float(self.tolerance),
            "pass": self.passed,
            "equality_expected": self.equality_expected,
            "metadata": self.metadata,
        })

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: lhs={self.lhs:.10g} rhs={self.rhs:.10g} margin={self.margin:.3e} tol={self.tolerance:.1e}"
