"""Radiation field ``R(s) = lim_{r -> inf} r^{(n-1)/2} u(s + r, r)`` by extrapolation."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..csvio import write_csv
from ..errors import DomainError
from ..solver.hankel import HankelMode
from ..solver.solution import ModeSolution

__all__ = ["RadiationSamples", "extract_radiation", "richardson_limit", "MAX_RICHARDSON_ORDER"]

#: Highest polynomial order used in the extrapolation in ``1/r``.
MAX_RICHARDSON_ORDER = 3


@dataclass(frozen=True)
class RadiationSamples:
    """Extrapolated radiation field of one mode.

    Attributes:
        mode_j: index of the link eigenvalue (``-1`` when unknown).
        nu, n: mode order and cone dimension.
        s_grid: increasing lapse values.
        values: extrapolated ``R(s)``.
        r_list: radii used for the extrapolation.
        raw: ``r^{(n-1)/2} u(s + r, r)`` with shape ``(len(s_grid), len(r_list))``.
        error: difference between the two highest extrapolation orders.
        trusted: ``False`` where successive extrapolation differences do not decrease.
    """

    mode_j: int
    nu: float
    n: int
    s_grid: np.ndarray
    values: np.ndarray
    r_list: np.ndarray
    raw: np.ndarray
    error: np.ndarray
    trusted: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        s = np.asarray(self.s_grid, dtype=float)
        if s.ndim != 1 or np.any(np.diff(s) <= 0):
            raise DomainError("s_grid must be strictly increasing")
        for name in ("s_grid", "values", "r_list", "raw", "error", "trusted"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.values.shape != s.shape or self.error.shape != s.shape or self.trusted.shape != s.shape:
            raise DomainError("values, error and trusted must match s_grid")

    def window(self, s_min: float, s_max: float, trusted_only: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Samples with ``s_min <= s <= s_max`` (trusted ones by default)."""
        sel = (self.s_grid >= s_min) & (self.s_grid <= s_max)
        if trusted_only:
            sel &= self.trusted
        return self.s_grid[sel], self.values[sel]

    def with_values(self, values: np.ndarray, label: str = "derived") -> "RadiationSamples":
        """Same grid and diagnostics with replaced values (e.g. after subtracting a fit)."""
        meta = dict(self.metadata)
        meta["derived"] = label
        return RadiationSamples(
            self.mode_j, self.nu, self.n, self.s_grid, np.asarray(values, dtype=float),
            self.r_list, self.raw, self.error, self.trusted, meta,
        )

    def to_csv(self, path: str | Path) -> Path:
        header = ["s", "R", "error", "trusted"] + [f"raw_r{k}" for k in range(self.r_list.size)]
        rows = [
            [s, v, e, bool(tr)] + list(raw)
            for s, v, e, tr, raw in zip(self.s_grid, self.values, self.error, self.trusted, self.raw)
        ]
        return write_csv(path, header, rows)

    @classmethod
    def synthetic(cls, s_grid, values, nu: float = float("nan"), n: int = 2) -> "RadiationSamples":
        """Wrap exact samples (no extrapolation) for tests and experiments."""
        s = np.asarray(s_grid, dtype=float)
        v = np.asarray(values, dtype=float)
        return cls(-1, nu, n, s, v, np.array([np.inf]), v[:, None], np.zeros_like(v),
                   np.ones_like(v, dtype=bool), {"source": "synthetic"})


def richardson_limit(r_list: np.ndarray, raw: np.ndarray, order: int | None = None):
    """Extrapolate ``raw`` (last axis indexed like ``r_list``) to ``1/r -> 0``.

    Uses Neville's scheme on the ``order + 1`` largest radii.  Returns the
    limit, the error estimate ``|T_p - T_{p-1}|`` and a trust flag that is
    ``True`` when the successive differences ``|T_{k+1} - T_k|`` do not grow.
    """
    r_list = np.asarray(r_list, dtype=float)
    raw = np.asarray(raw, dtype=float)
    if r_list.size < 2:
        raise DomainError("extrapolation needs at least two radii")
    p = min(r_list.size - 1, MAX_RICHARDSON_ORDER) if order is None else int(order)
    order_idx = np.argsort(r_list)[::-1][: p + 1]  # largest radii first
    h = 1.0 / r_list[order_idx]
    vals = raw[..., order_idx]
    # Neville tableau evaluated at h = 0; diagonal T_k uses the k+1 smallest h
    tab = [vals[..., i] for i in range(p + 1)]
    diag = [tab[0]]
    for k in range(1, p + 1):
        new = []
        for i in range(p + 1 - k):
            hi, hk = h[i], h[i + k]
            new.append((hk * tab[i] - hi * tab[i + 1]) / (hk - hi))
        tab = new
        diag.append(tab[0])
    diag = np.stack(diag, axis=-1)
    steps = np.abs(np.diff(diag, axis=-1))
    limit = diag[..., -1]
    error = steps[..., -1]
    scale = np.maximum(np.abs(limit), np.max(np.abs(vals), axis=-1))
    slack = 1e-13 * scale + 1e-300
    trusted = np.all(steps[..., 1:] <= steps[..., :-1] + slack[..., None], axis=-1)
    return limit, error, trusted


def _sample_solution(sol: ModeSolution, t: np.ndarray, r: np.ndarray) -> np.ndarray:
    if (np.any(t < sol.t_grid[0]) or np.any(t > sol.t_grid[-1])
            or np.any(r < sol.r_grid[0]) or np.any(r > sol.r_grid[-1])):
        raise DomainError("requested (s + r, r) lies outside the sampled solution")
    method = "cubic" if min(sol.t_grid.size, sol.r_grid.size) >= 4 else "linear"
    interp = RegularGridInterpolator((sol.t_grid, sol.r_grid), sol.values, method=method)
    return interp(np.column_stack([t, r]))


def extract_radiation(
    source: HankelMode | ModeSolution,
    s_grid,
    r_list,
    mode_j: int = -1,
) -> RadiationSamples:
    """Sample ``r^{(n-1)/2} u(s + r, r)`` on ``r_list`` and extrapolate in ``1/r``.

    ``source`` is either a :class:`HankelMode` (evaluated exactly) or a
    sampled :class:`ModeSolution` (interpolated).  The lapse window must
    satisfy ``max |s| <= min(r_list) / 5``.
    """
    s = np.asarray(s_grid, dtype=float)
    r_list = np.asarray(r_list, dtype=float)
    if r_list.size < 3:
        raise DomainError("r_list needs at least three radii for extrapolation")
    if np.any(np.diff(r_list) <= 0) or r_list[0] <= 0:
        raise DomainError("r_list must be positive and increasing")
    if np.max(np.abs(s)) > r_list[0] / 5.0:
        raise DomainError(
            f"lapse values up to {np.max(np.abs(s)):.4g} need min(r_list) >= 5 max|s|"
        )
    n = source.n
    tt = (s[:, None] + r_list[None, :]).ravel()
    rr = np.broadcast_to(r_list[None, :], (s.size, r_list.size)).ravel()
    if isinstance(source, HankelMode):
        u = source.evaluate_at(tt, rr)
    elif isinstance(source, ModeSolution):
        u = _sample_solution(source, tt, rr)
    else:
        raise DomainError("source must be a HankelMode or a ModeSolution")
    raw = (u * rr ** ((n - 1) / 2.0)).reshape(s.size, r_list.size)
    limit, error, trusted = richardson_limit(r_list, raw)
    meta = {"source": type(source).__name__, "richardson_order": int(min(r_list.size - 1, MAX_RICHARDSON_ORDER))}
    return RadiationSamples(mode_j, float(source.nu), int(n), s, limit, r_list, raw, error, trusted, meta)
