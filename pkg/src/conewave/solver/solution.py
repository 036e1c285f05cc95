"""Sampled mode solutions, their energy, and export helpers."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from ..csvio import write_csv, write_json
from ..errors import DomainError

__all__ = ["ModeSolution", "energy", "energy_series", "export_solution"]


@dataclass(frozen=True)
class ModeSolution:
    """``u(t_i, r_m)`` for one mode, produced by ``method`` (``"hankel"`` or ``"fd"``).

    ``velocity`` and ``gradient`` hold ``u_t`` and ``u_r`` on the same grid
    when the producing method can supply them.
    """

    nu: float
    n: int
    t_grid: np.ndarray
    r_grid: np.ndarray
    values: np.ndarray
    method: str
    velocity: np.ndarray | None = None
    gradient: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = np.asarray(self.t_grid, dtype=float)
        r = np.asarray(self.r_grid, dtype=float)
        vals = np.asarray(self.values)
        if self.method not in ("hankel", "fd"):
            raise DomainError(f"unknown method {self.method!r}")
        if t.ndim != 1 or r.ndim != 1 or vals.shape != (t.size, r.size):
            raise DomainError("values must have shape (len(t_grid), len(r_grid))")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise DomainError("grids must be increasing and r_grid positive")
        for name in ("t_grid", "r_grid", "values"):
            arr = {"t_grid": t, "r_grid": r, "values": vals}[name]
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("velocity", "gradient"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr)
                if arr.shape != vals.shape:
                    raise DomainError(f"{name} must match the shape of values")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def mu_sq(self) -> float:
        return self.nu * self.nu - ((self.n - 2) / 2.0) ** 2


def _time_derivative(sol: ModeSolution, i: int) -> np.ndarray:
    if sol.velocity is not None:
        return sol.velocity[i]
    if not 0 < i < sol.t_grid.size - 1:
        raise DomainError("energy needs an interior time index when no velocity is stored")
    t = sol.t_grid
    return (sol.values[i + 1] - sol.values[i - 1]) / (t[i + 1] - t[i - 1])


def _radial_derivative(sol: ModeSolution, i: int) -> np.ndarray:
    if sol.gradient is not None:
        return sol.gradient[i]
    return np.gradient(sol.values[i], sol.r_grid, edge_order=2)


def energy(sol: ModeSolution, t_index: int) -> float:
    """Conserved energy ``int (u_t^2 + u_r^2 + mu^2 u^2/r^2) r^{n-1} dr``.

    The integral is taken with the trapezoidal rule on ``r_grid``.
    """
    i = int(t_index)
    if not -sol.t_grid.size <= i < sol.t_grid.size:
        raise DomainError("t_index out of range")
    i %= sol.t_grid.size
    r = sol.r_grid
    u = sol.values[i]
    ut = _time_derivative(sol, i)
    ur = _radial_derivative(sol, i)
    dens = (np.abs(ut) ** 2 + np.abs(ur) ** 2 + sol.mu_sq * np.abs(u) ** 2 / r**2) * r ** (sol.n - 1)
    return float(trapezoid(dens, r))


def energy_series(sol: ModeSolution) -> np.ndarray:
    """Energy at every time index where it is defined."""
    if sol.velocity is not None:
        idx = range(sol.t_grid.size)
    else:
        idx = range(1, sol.t_grid.size - 1)
    return np.array([energy(sol, i) for i in idx])


def export_solution(sol: ModeSolution, csv_path: str | Path, json_path: str | Path | None = None) -> None:
    """Write ``(t, r, u)`` rows plus a JSON sidecar with the method metadata."""
    rows = (
        (t, r, u)
        for t, row in zip(sol.t_grid, sol.values)
        for r, u in zip(sol.r_grid, row)
    )
    write_csv(csv_path, ("t", "r", "u"), rows)
    if json_path is not None:
        write_json(
            json_path,
            {
                "method": sol.method,
                "nu": sol.nu,
                "n": sol.n,
                "n_t": int(sol.t_grid.size),
                "n_r": int(sol.r_grid.size),
                "metadata": sol.metadata,
            },
        )
