"""Two-sided certified interval results."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

BRACKET_SLACK = 1e-7


@dataclass
class Bracket:
    """[lower, upper] enclosure of a scalar quantity with re-checkable sides.

    ``lower`` comes from a relaxation (outer bound), ``upper`` from an
    explicit feasible point (inner bound); the construction enforces
    lower <= upper + 1e-7. Certificates are dicts whose schema each
    producer documents; ``meta`` carries relaxation labels, residuals and
    convergence notes.
    """

    lower: float
    upper: float
    lower_certificate: dict[str, Any] = field(default_factory=dict, repr=False)
    upper_certificate: dict[str, Any] = field(default_factory=dict, repr=False)
    iterations: int = 0
    runtime: float = 0.0
    meta: dict[str, Any] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.lower = float(self.lower)
        self.upper = float(self.upper)
        if not self.lower <= self.upper + BRACKET_SLACK:
            raise ValueError(
                f"invalid bracket: lower {self.lower!r} > upper {self.upper!r} + {BRACKET_SLACK}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def transform(self, f, f_lower=None) -> "Bracket":
        """Apply a monotone nondecreasing scalar map to both endpoints."""
        g = f if f_lower is None else f_lower
        return Bracket(g(self.lower), f(self.upper),
                       self.lower_certificate, self.upper_certificate,
                       self.iterations, self.runtime, dict(self.meta))

    def scaled(self, factor: float) -> "Bracket":
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        return Bracket(self.lower * factor, self.upper * factor,
                       self.lower_certificate, self.upper_certificate,
                       self.iterations, self.runtime, dict(self.meta))

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack
