"""Closed-form propagator of a single mode in the diffracted region.

For ``t > r + r'`` the oscillatory integral

    S(t; r, r') = int_0^inf J_nu(lam r) J_nu(lam r') sin(lam t) d lam

equals ``cos(nu pi) / (pi sqrt(r r')) * Q_{nu-1/2}(X)`` with
``X = (t^2 - r^2 - r'^2) / (2 r r')`` and ``Q`` the Legendre function of
the second kind.  It vanishes for half-integer ``nu`` (sharp Huygens
principle), and its large-``X`` behaviour carries the decay exponents of
the radiation field.

``Q_mu`` is evaluated through

    Q_mu(cosh eta) = sqrt(pi) Gamma(mu+1)/Gamma(mu+3/2) e^{-(mu+1) eta}
                     2F1(1/2, mu+1; mu+3/2; e^{-2 eta}),

whose hypergeometric argument stays well inside the unit disc for the
``X >= 1.05`` used here.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln, hyp2f1

from ..errors import DomainError
from ..spectrum import is_half_integer

__all__ = ["legendre_q", "legendre_q_prime", "huygens_factor", "KERNEL_X_MIN"]

#: Smallest ``X`` at which the closed-form kernel is used by the evaluators.
KERNEL_X_MIN = 1.05


def _prefactor(mu: float) -> float:
    return float(np.exp(0.5 * np.log(np.pi) + gammaln(mu + 1.0) - gammaln(mu + 1.5)))


def legendre_q(mu: float, x: np.ndarray) -> np.ndarray:
    """Legendre function ``Q_mu(x)`` for real ``x > 1`` and ``mu > -1``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 1):
        raise DomainError("legendre_q needs x > 1")
    eta = np.arccosh(x)
    w = np.exp(-2.0 * eta)
    return _prefactor(mu) * np.exp(-(mu + 1.0) * eta) * hyp2f1(0.5, mu + 1.0, mu + 1.5, w)


def legendre_q_prime(mu: float, x: np.ndarray) -> np.ndarray:
    """Derivative ``dQ_mu/dx`` for real ``x > 1``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 1):
        raise DomainError("legendre_q_prime needs x > 1")
    eta = np.arccosh(x)
    w = np.exp(-2.0 * eta)
    a, b, c = 0.5, mu + 1.0, mu + 1.5
    f = hyp2f1(a, b, c, w)
    fp = (a * b / c) * hyp2f1(a + 1.0, b + 1.0, c + 1.0, w)
    d_eta = _prefactor(mu) * np.exp(-(mu + 1.0) * eta) * (-(mu + 1.0) * f - 2.0 * w * fp)
    return d_eta / np.sinh(eta)


def huygens_factor(nu: float) -> float:
    """``cos(nu pi)``, set to exactly zero for half-integer orders."""
    return 0.0 if is_half_integer(nu) else float(np.cos(np.pi * nu))
