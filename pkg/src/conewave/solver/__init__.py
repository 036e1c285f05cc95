"""Mode evolution: exact Hankel calculus and a finite-difference scheme."""

from .data import ModeInitialData, bump, bump_data, mode_equation_coeffs, zero_profile
from .hankel import HankelMode, QuadratureSpec, hankel_evolve, hankel_transform
from .kernel import legendre_q, legendre_q_prime
from .solution import ModeSolution, energy, energy_series, export_solution

__all__ = [
    "ModeInitialData", "bump", "bump_data", "mode_equation_coeffs", "zero_profile",
    "HankelMode", "QuadratureSpec", "hankel_evolve", "hankel_transform",
    "legendre_q", "legendre_q_prime",
    "ModeSolution", "energy", "energy_series", "export_solution",
]

from .fd import fd_evolve, stable_dt  # noqa: E402

__all__ += ["fd_evolve", "stable_dt"]
