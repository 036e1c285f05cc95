"""Initial data for a single angular mode."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DomainError

__all__ = ["ModeInitialData", "bump", "zero_profile", "bump_data", "mode_equation_coeffs"]

Profile = Callable[[np.ndarray], np.ndarray]


def bump(r_a: float, r_b: float, amplitude: float = 1.0) -> Profile:
    """Smooth bump ``exp(-1/(1 - y^2))`` on ``(r_a, r_b)``, zero outside.

    ``y = (2 r - r_a - r_b)/(r_b - r_a)`` maps the support onto ``(-1, 1)``.
    """
    if not 0 < r_a < r_b:
        raise DomainError("bump support needs 0 < r_a < r_b")
    mid = 0.5 * (r_a + r_b)
    half = 0.5 * (r_b - r_a)

    def profile(r):
        r = np.asarray(r, dtype=float)
        y = (r - mid) / half
        inside = np.abs(y) < 1
        out = np.zeros_like(r)
        yi = y[inside]
        out[inside] = amplitude * np.exp(-1.0 / (1.0 - yi * yi))
        return out

    return profile


def zero_profile(r):
    return np.zeros_like(np.asarray(r, dtype=float))


def mode_equation_coeffs(n: int, nu: float) -> float:
    """Potential coefficient ``c = nu^2 - 1/4`` of the radial equation.

    ``v = r^{(n-1)/2} u`` solves ``v_tt = v_rr - c/r^2 v``.
    """
    if not nu >= 0:
        raise DomainError(f"nu must be nonnegative, got {nu!r}")
    return nu * nu - 0.25


@dataclass(frozen=True)
class ModeInitialData:
    """Cauchy data ``(u0, u1)`` of one mode of order ``nu`` on ``C(Z)``, ``dim C(Z) = n``.

    ``label`` is a free-form description used in metadata and logs.
    """

    nu: float
    n: int
    u0: Profile
    u1: Profile
    support: tuple[float, float]
    label: str = field(default="custom", compare=False)

    def __post_init__(self) -> None:
        r_a, r_b = (float(x) for x in self.support)
        object.__setattr__(self, "support", (r_a, r_b))
        if not (math.isfinite(self.nu) and self.nu >= 0):
            raise DomainError(f"nu must be a nonnegative real, got {self.nu!r}")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n!r}")
        if not 0 < r_a < r_b:
            raise DomainError("support must satisfy 0 < r_a < r_b")
        probe = np.concatenate(
            [np.linspace(r_a * 0.01, r_a, 7, endpoint=False), np.linspace(r_b, 2 * r_b + 1, 7)[1:]]
        )
        for name in ("u0", "u1"):
            vals = np.asarray(getattr(self, name)(probe), dtype=float)
            if vals.shape != probe.shape:
                raise DomainError(f"{name} must be vectorized over numpy arrays")
            if np.any(vals != 0):
                raise DomainError(f"{name} does not vanish outside the declared support")

    @property
    def p_weight(self) -> float:
        """Exponent ``(n-2)/2`` relating ``u`` to the Hankel transform variable."""
        return (self.n - 2) / 2.0

    @property
    def mu_sq(self) -> float:
        """Link eigenvalue of the mode: ``nu^2 - ((n-2)/2)^2``."""
        return self.nu * self.nu - self.p_weight**2

    def scaled(self, a: float, other: "ModeInitialData | None" = None, b: float = 0.0) -> "ModeInitialData":
        """Linear combination ``a * self + b * other`` (same ``nu``, ``n``)."""
        if other is None:
            return ModeInitialData(
                self.nu, self.n, lambda r: a * self.u0(r), lambda r: a * self.u1(r), self.support,
                label=f"{a}*({self.label})",
            )
        if other.nu != self.nu or other.n != self.n:
            raise DomainError("linear combinations need data of the same mode")
        support = (min(self.support[0], other.support[0]), max(self.support[1], other.support[1]))
        return ModeInitialData(
            self.nu, self.n,
            lambda r: a * self.u0(r) + b * other.u0(r),
            lambda r: a * self.u1(r) + b * other.u1(r),
            support,
            label=f"{a}*({self.label})+{b}*({other.label})",
        )


def bump_data(
    nu: float,
    n: int,
    support: tuple[float, float] = (2.0, 3.0),
    u0_amplitude: float = 1.0,
    u1_amplitude: float = 0.0,
) -> ModeInitialData:
    """Bump displacement and/or velocity on ``support``."""
    r_a, r_b = support
    u0 = bump(r_a, r_b, u0_amplitude) if u0_amplitude else zero_profile
    u1 = bump(r_a, r_b, u1_amplitude) if u1_amplitude else zero_profile
    label = f"bump[{r_a},{r_b}] u0*{u0_amplitude} u1*{u1_amplitude}"
    return ModeInitialData(float(nu), int(n), u0, u1, (float(r_a), float(r_b)), label=label)
