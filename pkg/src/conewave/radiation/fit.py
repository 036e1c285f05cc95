"""Least-squares fits of the radiation field against a ladder of decay exponents."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ..csvio import write_csv
from ..errors import ConditioningError, DomainError
from ..spectrum import ExponentEntry
from .extract import RadiationSamples

__all__ = [
    "ExpansionFit",
    "fit_expansion",
    "refine_leading_exponent",
    "normalize_ladder",
    "CONDITION_LIMIT",
    "DEFAULT_WINDOW",
]

CONDITION_LIMIT = 1e12
DEFAULT_WINDOW = (5.0, 50.0)


@dataclass(frozen=True)
class ExpansionFit:
    """Coefficients of ``R(s) ~ sum_i a_i s^{-lambda_i} (log s)^kappa`` on a window.

    ``labels`` names each basis function as ``(lambda, kappa)``.
    ``leading_refined`` is the leading exponent after the free-exponent
    refinement, when that was requested.
    """

    ladder: tuple[tuple[float, bool], ...]
    labels: tuple[tuple[float, int], ...]
    coefficients: np.ndarray
    window: tuple[float, float]
    residual: float
    condition: float
    n_samples: int
    leading_refined: float | None = None

    def evaluate(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return _design(s, self.labels) @ self.coefficients

    def term(self, index: int, s) -> np.ndarray:
        """Contribution of basis function ``index`` alone."""
        s = np.asarray(s, dtype=float)
        return _design(s, (self.labels[index],))[:, 0] * self.coefficients[index]

    def to_csv(self, path: str | Path) -> Path:
        rows = [(lam, kappa, a) for (lam, kappa), a in zip(self.labels, self.coefficients)]
        return write_csv(path, ("lambda", "log_power", "coefficient"), rows)

    def as_dict(self) -> dict:
        return {
            "labels": [[lam, kappa] for lam, kappa in self.labels],
            "coefficients": [float(a) for a in self.coefficients],
            "window": list(self.window),
            "residual": self.residual,
            "condition": self.condition,
            "n_samples": self.n_samples,
            "leading_refined": self.leading_refined,
        }


def normalize_ladder(ladder: Iterable) -> tuple[tuple[float, bool], ...]:
    """Accept :class:`ExponentEntry` items, ``(lambda, flag)`` pairs or bare exponents."""
    out = []
    for item in ladder:
        if isinstance(item, ExponentEntry):
            out.append((float(item.decay), bool(item.log_flag)))
        elif isinstance(item, (tuple, list)):
            lam = float(item[0])
            flag = bool(item[-1]) if len(item) >= 2 and isinstance(item[-1], (bool, np.bool_)) else False
            out.append((lam, flag))
        else:
            out.append((float(item), False))
    return tuple(out)


def _labels(ladder: Sequence[tuple[float, bool]]) -> tuple[tuple[float, int], ...]:
    labels = []
    for lam, flag in ladder:
        labels.append((lam, 0))
        if flag:
            labels.append((lam, 1))
    return tuple(labels)


def _design(s: np.ndarray, labels: Sequence[tuple[float, int]]) -> np.ndarray:
    cols = []
    logs = np.log(s)
    for lam, kappa in labels:
        cols.append(s ** (-lam) * logs**kappa)
    return np.column_stack(cols) if cols else np.zeros((s.size, 0))


def _solve(s: np.ndarray, y: np.ndarray, labels):
    design = _design(s, labels)
    norms = np.linalg.norm(design, axis=0)
    if np.any(norms == 0):
        raise ConditioningError("a basis function vanishes on the window", {"labels": labels})
    scaled = design / norms
    cond = float(np.linalg.cond(scaled))
    coef, *_ = np.linalg.lstsq(scaled, y, rcond=None)
    coef = coef / norms
    resid = y - design @ coef
    denom = np.linalg.norm(y)
    rel = float(np.linalg.norm(resid) / denom) if denom > 0 else float(np.linalg.norm(resid))
    return coef, rel, cond


def fit_expansion(
    R: RadiationSamples,
    ladder: Iterable,
    n_terms: int,
    window: tuple[float, float] = DEFAULT_WINDOW,
    refine_leading: bool = False,
) -> ExpansionFit:
    """Fit ``R`` on ``window`` with the first ``n_terms`` ladder exponents.

    Entries whose log flag is set contribute an extra ``s^{-lambda} log s``
    column.  Only trusted samples are used.

    Raises:
        DomainError: bad window or too few ladder entries / samples.
        ConditioningError: the scaled design matrix has condition number
            above ``1e12``; use fewer terms or a wider window.
    """
    entries = normalize_ladder(ladder)
    if n_terms < 1 or n_terms > len(entries):
        raise DomainError(f"n_terms={n_terms} but the ladder has {len(entries)} entries")
    s_min, s_max = window
    if not (1 <= s_min < s_max):
        raise DomainError("window must satisfy 1 <= s_min < s_max")
    if s_min < R.s_grid[0] * (1 - 1e-12) or s_max > R.s_grid[-1] * (1 + 1e-12):
        raise DomainError("window must lie inside the sampled lapse range")
    used = entries[:n_terms]
    labels = _labels(used)
    s, y = R.window(s_min, s_max)
    if s.size < len(labels) + 1:
        raise DomainError(f"only {s.size} trusted samples in the window for {len(labels)} basis functions")
    coef, rel, cond = _solve(s, y, labels)
    if cond > CONDITION_LIMIT:
        raise ConditioningError(
            f"condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}; use fewer terms or a wider window",
            {"condition": cond, "n_terms": n_terms, "window": window},
        )
    leading = None
    if refine_leading:
        leading = refine_leading_exponent(R, used, window)
    return ExpansionFit(used, labels, coef, (float(s_min), float(s_max)), rel, cond, int(s.size), leading)


def refine_leading_exponent(
    R: RadiationSamples,
    ladder: Iterable,
    window: tuple[float, float] = DEFAULT_WINDOW,
    half_width: float = 0.45,
) -> float:
    """Leading exponent with the remaining ladder exponents held fixed.

    Minimizes the least-squares residual over ``lambda_0`` in
    ``[lambda_0 - half_width, lambda_0 + half_width]`` (variable projection:
    the amplitudes are solved linearly for each trial exponent).
    """
    entries = normalize_ladder(ladder)
    if not entries:
        raise DomainError("refinement needs at least one ladder entry")
    s, y = R.window(*window)
    lam0, flag0 = entries[0]
    rest = entries[1:]

    def objective(lam):
        labels = _labels(((lam, flag0),) + tuple(rest))
        _, rel, _ = _solve(s, y, labels)
        return rel

    res = minimize_scalar(
        objective,
        bounds=(lam0 - half_width, lam0 + half_width),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x)
