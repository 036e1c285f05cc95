"""Numerical Mellin transform and pole detection.

``M u(sigma) = int_0^inf chi(rho) u(rho) rho^{-i sigma - 1} d rho``.

In the variable ``l = log rho`` the integrand is ``chi u rho^{-i sigma}``.
The integral is accumulated over intervals of fixed width in ``l``
walking down towards ``rho = 0``.  Once the samples (or the interval
budget) run out, the remaining tail is completed geometrically from the
ratio ``q`` of the last two interval integrals, which is exact when ``u``
is a pure power near ``rho = 0``.  The integral is declared divergent when
``|q| >= 1``.

Near the convergence abscissa ``Im sigma = -a`` of ``u ~ rho^a`` the
tail blows up like ``1/(a - i sigma)``, so ``1/M`` has a simple root at
the pole.  Subtracting fitted leading terms moves the abscissa down and
exposes the next pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from ..csvio import write_csv
from ..errors import ConvergenceError, DomainError
from .extract import RadiationSamples
from .fit import fit_expansion

__all__ = [
    "Cutoff",
    "MellinScan",
    "PoleScanResult",
    "mellin",
    "mellin_samples",
    "mellin_scan",
    "locate_pole",
    "mellin_pole_scan",
]

_GL_X, _GL_W = leggauss(24)


@dataclass(frozen=True)
class Cutoff:
    """Cutoff ``chi``: ``"sharp"`` is the indicator of ``[0, rho_c]``;
    ``"smooth"`` equals 1 on ``[0, rho_c/2]``, vanishes beyond ``rho_c`` and is
    ``C^inf`` in between."""

    kind: str = "sharp"
    rho_c: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("sharp", "smooth"):
            raise DomainError(f"unknown cutoff kind {self.kind!r}")
        if not self.rho_c > 0:
            raise DomainError("cutoff radius must be positive")

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        if self.kind == "sharp":
            return (rho <= self.rho_c).astype(float)
        y = (rho / self.rho_c - 0.5) / 0.5
        out = np.where(y <= 0, 1.0, 0.0)
        mid = (y > 0) & (y < 1)
        ym = y[mid]
        a = np.exp(-1.0 / (1.0 - ym))
        b = np.exp(-1.0 / ym)
        out[mid] = a / (a + b)
        return out

    def as_dict(self) -> dict:
        return {"kind": self.kind, "rho_c": self.rho_c}


def _interval(func_l: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, sigma: complex) -> complex:
    half = 0.5 * (hi - lo)
    l = lo + half * (_GL_X + 1.0)
    vals = func_l(l) * np.exp(-1j * sigma * l)
    return complex(half * np.dot(_GL_W, vals))


def _finish(parts: list[complex], sigma: complex, what: str) -> complex:
    total = complex(sum(parts))
    if not np.isfinite(total):
        raise ConvergenceError(
            f"Mellin integral diverges at the lower endpoint rho = 0 ({what})",
            {"sigma": sigma, "endpoint": "rho=0"},
        )
    last, prev = parts[-1], parts[-2]
    if last == 0:
        return total
    if prev == 0:
        raise ConvergenceError(
            "cannot estimate the tail towards rho = 0", {"sigma": sigma, "endpoint": "rho=0"}
        )
    q = last / prev
    if abs(q) >= 1.0:
        raise ConvergenceError(
            f"partial Mellin integrals do not decay towards the endpoint rho = 0 (|q| = {abs(q):.6g}, {what})",
            {"sigma": sigma, "ratio": q, "endpoint": "rho=0"},
        )
    return total + last * q / (1.0 - q)


def mellin(
    u: Callable[[np.ndarray], np.ndarray],
    sigma: complex,
    cutoff: Cutoff = Cutoff(),
    width: float = math.log(2.0) / 4.0,
    max_intervals: int = 800,
) -> complex:
    """Mellin transform of a function given as a callable of ``rho``."""
    sigma = complex(sigma)
    lc = math.log(cutoff.rho_c)

    def func_l(l):
        rho = np.exp(l)
        return cutoff(rho) * np.asarray(u(rho), dtype=complex)

    parts: list[complex] = []
    for k in range(max_intervals):
        hi = lc - k * width
        parts.append(_interval(func_l, hi - width, hi, sigma))
        if not np.isfinite(parts[-1]):
            break
        total = abs(sum(parts))
        if k >= 4 and abs(parts[-1]) <= 1e-17 * total and abs(parts[-2]) <= 1e-16 * total:
            return complex(sum(parts))
    return _finish(parts, sigma, "callable input")


class _SampledFunction:
    def __init__(self, rho: np.ndarray, values: np.ndarray):
        rho = np.asarray(rho, dtype=float)
        values = np.asarray(values, dtype=float)
        order = np.argsort(rho)
        rho, values = rho[order], values[order]
        if rho.size < 8 or np.any(np.diff(rho) <= 0) or rho[0] <= 0:
            raise DomainError("need at least 8 distinct positive rho samples")
        self.l_min = float(np.log(rho[0]))
        self.l_max = float(np.log(rho[-1]))
        self.spline = CubicSpline(np.log(rho), values)


def mellin_samples(
    rho,
    values,
    sigma: complex,
    cutoff: Cutoff,
    target_width: float = 0.25,
) -> complex:
    """Mellin transform of sampled data on ``[min rho, max rho]``.

    The samples must reach the cutoff radius; below ``min rho`` the tail is
    completed geometrically.
    """
    f = values if isinstance(values, _SampledFunction) else _SampledFunction(rho, values)
    return _mellin_sampled(f, complex(sigma), cutoff, target_width)


def _mellin_sampled(f: _SampledFunction, sigma: complex, cutoff: Cutoff, target_width: float) -> complex:
    lc = math.log(cutoff.rho_c)
    if lc > f.l_max + 1e-12:
        raise DomainError("samples must extend up to the cutoff radius")
    span = lc - f.l_min
    k = max(4, int(round(span / target_width)))
    width = span / k

    def func_l(l):
        return cutoff(np.exp(l)) * f.spline(l)

    parts = [_interval(func_l, lc - (i + 1) * width, lc - i * width, sigma) for i in range(k)]
    return _finish(parts, sigma, "sampled input")


@dataclass(frozen=True)
class MellinScan:
    """Mellin transform on a grid of ``sigma`` (only converged points are kept)."""

    sigma_samples: np.ndarray
    values: np.ndarray
    cutoff: Cutoff

    def to_csv(self, path: str | Path) -> Path:
        rows = [(s.real, s.imag, v.real, v.imag) for s, v in zip(self.sigma_samples, self.values)]
        return write_csv(path, ("re_sigma", "im_sigma", "re_M", "im_M"), rows)


def mellin_scan(
    rho,
    values,
    re_values: Iterable[float],
    im_values: Iterable[float],
    cutoff: Cutoff,
) -> MellinScan:
    """Evaluate the sampled Mellin transform on ``re_values x im_values``."""
    f = _SampledFunction(rho, values)
    sig, vals = [], []
    for im in im_values:
        for re in re_values:
            s = complex(re, im)
            try:
                m = _mellin_sampled(f, s, cutoff, 0.25)
            except ConvergenceError:
                continue
            if np.isfinite(m):
                sig.append(s)
                vals.append(m)
    return MellinScan(np.array(sig, dtype=complex), np.array(vals, dtype=complex), cutoff)


def locate_pole(
    evaluate: Callable[[complex], complex],
    y_range: tuple[float, float],
    dy: float = 0.01,
    n_fit: int = 6,
) -> tuple[complex, dict]:
    """Find the first pole ``sigma = -i y*`` on the negative imaginary axis.

    ``evaluate(sigma)`` must raise :class:`ConvergenceError` beyond the
    convergence abscissa.  The scan walks ``y`` upwards from
    ``y_range[0]``; the last ``n_fit`` converged values of ``1/M`` are fitted
    by a quadratic in ``y`` whose root next to the abscissa is returned.
    """
    y_lo, y_hi = y_range
    ys, inv = [], []
    y = y_lo
    stopped = False
    while y <= y_hi + 1e-12:
        try:
            m = evaluate(complex(0.0, -y))
        except ConvergenceError:
            stopped = True
            break
        if m == 0:
            raise ConvergenceError("the Mellin transform vanishes; there is no pole to locate",
                                   {"sigma": complex(0.0, -y)})
        ys.append(y)
        inv.append(1.0 / m)
        y += dy
    if len(ys) < 3:
        raise ConvergenceError(
            "no convergent Mellin values below the requested strip",
            {"y_range": y_range, "endpoint": "rho=0"},
        )
    yy = np.array(ys[-n_fit:])
    vv = np.real(np.array(inv[-n_fit:]))
    deg = min(2, yy.size - 1)
    coef = np.polyfit(yy - yy[-1], vv, deg)
    roots = np.roots(coef)
    roots = roots[np.abs(roots.imag) < 1e-9].real + yy[-1]
    diag = {"abscissa_bracket": (ys[-1], ys[-1] + dy) if stopped else None, "n_converged": len(ys)}
    if roots.size == 0:
        raise ConvergenceError("1/M has no real root near the abscissa", diag)
    y_star = float(roots[np.argmin(np.abs(roots - ys[-1]))])
    if not stopped and y_star > y_hi:
        raise ConvergenceError("no pole inside the requested strip", diag)
    diag["last_converged"] = ys[-1]
    return complex(0.0, -y_star), diag


@dataclass(frozen=True)
class PoleScanResult:
    poles: list[complex]
    diagnostics: list[str] = field(default_factory=list)
    scan: MellinScan | None = None


def mellin_pole_scan(
    R: RadiationSamples,
    strip: tuple[float, float],
    re_window: tuple[float, float] = (-0.5, 0.5),
    ladder: Iterable | None = None,
    n_poles: int = 1,
    window: tuple[float, float] | None = None,
    fit_window: tuple[float, float] | None = None,
    cutoff_kind: str = "smooth",
    dy: float = 0.01,
    scan_points: int = 0,
) -> PoleScanResult:
    """Locate Mellin poles of the radiation field in ``strip = (im_min, im_max)``.

    The samples are mapped to ``rho = 1/s`` (trusted samples in ``window``)
    with the cutoff radius ``rho_c = 1/s_min``.  After each pole, the
    corresponding fitted term (from :func:`fit_expansion` with ``ladder``
    on ``fit_window``) is subtracted so that the next pole becomes visible.
    ``scan_points > 0`` also records a ``MellinScan`` of the unsubtracted
    data on ``re_window x strip``.
    """
    im_min, im_max = strip
    if not im_min < im_max:
        raise DomainError("strip must satisfy im_min < im_max")
    s_lo, s_hi = window if window is not None else (R.s_grid[0], R.s_grid[-1])
    s, y = R.window(s_lo, s_hi)
    if s.size < 8:
        raise DomainError("too few trusted samples for the Mellin transform")
    rho = 1.0 / s[::-1]
    cutoff = Cutoff(cutoff_kind, 1.0 / s[0])
    entries = list(ladder) if ladder is not None else []
    fit = None
    if n_poles > 1:
        if len(entries) < 2:
            raise DomainError("deeper poles need a ladder to subtract fitted terms")
        n_fit = min(len(entries), n_poles + 1)
        fit = fit_expansion(R, entries, n_fit, fit_window or (s_lo, s_hi))
    poles: list[complex] = []
    diagnostics: list[str] = []
    residual = y.copy()
    y_start = -im_max
    for p in range(n_poles):
        if p > 0:
            residual = residual - fit.term(p - 1, s)
        f = _SampledFunction(rho, residual[::-1])
        try:
            pole, diag = locate_pole(
                lambda sig: _mellin_sampled(f, sig, cutoff, 0.25), (y_start, -im_min), dy=dy
            )
        except ConvergenceError as exc:
            diagnostics.append(f"pole {p}: {exc}")
            break
        if poles and -pole.imag <= -poles[-1].imag + 0.05:
            diagnostics.append(
                f"pole {p}: subtraction residual too large to deepen the strip "
                f"(abscissa {-pole.imag:.4f} after {-poles[-1].imag:.4f})"
            )
            break
        if pole.imag < im_min:
            diagnostics.append(f"pole {p}: next pole lies below the strip")
            break
        poles.append(pole)
        diagnostics.append(f"pole {p}: sigma = {pole.imag:+.6f}i, converged points = {diag['n_converged']}")
    scan = None
    if scan_points > 0:
        re_vals = np.linspace(re_window[0], re_window[1], scan_points)
        im_vals = np.linspace(im_min, im_max, scan_points)
        scan = mellin_scan(rho, y[::-1], re_vals, im_vals, cutoff)
    return PoleScanResult(poles, diagnostics, scan)
