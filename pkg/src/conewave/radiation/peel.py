"""Blind discovery of decay exponents by repeated log-log slope fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .extract import RadiationSamples

__all__ = ["PeeledTerm", "peel_exponents", "MIXED_DRIFT"]

#: Spread of the local log-log slope across the window above which a
#: peeled term is reported as a blend of several exponents.
MIXED_DRIFT = 0.02


@dataclass(frozen=True)
class PeeledTerm:
    lambda_est: float
    amplitude: float
    mixed: bool
    drift: float

    def __iter__(self):
        return iter((self.lambda_est, self.amplitude))


def _slope(s: np.ndarray, y: np.ndarray) -> float:
    a = np.column_stack([np.log(s), np.ones_like(s)])
    coef, *_ = np.linalg.lstsq(a, np.log(np.abs(y)), rcond=None)
    return float(coef[0])


def peel_exponents(
    R: RadiationSamples,
    max_terms: int,
    window: tuple[float, float],
    tol: float = 1e-3,
) -> list[PeeledTerm]:
    """Estimate decay exponents one at a time without assuming a ladder.

    Each step fits the slope of ``log|res|`` against ``log s`` on the top
    decade of the window (the spread of the local slope over the whole
    window is the ``drift`` behind the ``mixed`` flag), fits the amplitude of ``s^{-lambda}`` there, and
    subtracts it over the whole window.  Peeling stops when the residual
    falls below ``tol`` (relative to the original signal), after
    ``max_terms`` terms, when the residual changes sign on the top decade,
    or when a subtraction makes the residual grow (that term is dropped).
    """
    s_min, s_max = window
    if not (0 < s_min < s_max):
        raise DomainError("window must satisfy 0 < s_min < s_max")
    if s_max < 10 * s_min * (1 - 1e-12):
        raise DomainError("the peeling window must span at least one decade")
    sel = (R.s_grid >= s_min) & (R.s_grid <= s_max)
    if not np.all(R.trusted[sel]):
        raise DomainError("radiation samples are not trusted on the whole window")
    s = R.s_grid[sel]
    res = R.values[sel].astype(float).copy()
    if s.size < 6:
        raise DomainError("too few samples in the peeling window")
    top = s >= s_max / 10.0
    norm0 = np.linalg.norm(res)
    if norm0 == 0:
        return []
    terms: list[PeeledTerm] = []
    current = norm0
    for _ in range(max_terms):
        y = res[top]
        if np.any(y == 0) or np.any(np.sign(y) != np.sign(y[0])):
            break
        lam = -_slope(s[top], y)
        basis = s ** (-lam)
        amp = float(np.dot(basis[top], y) / np.dot(basis[top], basis[top]))
        if np.any(res == 0) or np.any(np.sign(res) != np.sign(res[0])):
            drift = float("inf")
        else:
            local = np.gradient(np.log(np.abs(res)), np.log(s))
            drift = float(np.ptp(local))
        new = res - amp * basis
        new_norm = np.linalg.norm(new)
        if new_norm > current:
            break
        terms.append(PeeledTerm(lam, amp, drift > MIXED_DRIFT, drift))
        res, current = new, new_norm
        if current < tol * norm0:
            break
    return terms
