"""Leapfrog finite differences for one mode.

The scheme evolves ``v = r^{(n-1)/2} u``, which solves

    v_tt = v_rr - c / r^2 v,   c = nu^2 - 1/4,

on the staggered grid ``r_m = (m + 1/2) dr``.  The ghost value
``v_{-1} = -v_0`` puts ``v = 0`` at the tip, and the outer boundary is
placed outside the domain of influence of the data, so it is never
reached by the solution.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from ..errors import ConfigError, DomainError, UnsupportedError
from .data import ModeInitialData, mode_equation_coeffs
from .solution import ModeSolution

__all__ = ["fd_evolve", "stable_dt", "CFL_LIMIT"]

#: Largest accepted ``dt/dr``.
CFL_LIMIT = 0.9


def _spatial_operator_bound(c: float, dr: float, m: int) -> float:
    """Largest eigenvalue of ``-d_rr + c/r^2`` on the staggered grid (positive)."""
    r = (np.arange(m) + 0.5) * dr
    diag = 2.0 / dr**2 + c / r**2
    diag[0] += 1.0 / dr**2  # ghost v_{-1} = -v_0
    off = -np.ones(m - 1) / dr**2
    top = eigvalsh_tridiagonal(diag, off, select="i", select_range=(m - 1, m - 1))
    return float(top[0])


def stable_dt(nu: float, dr: float, m: int = 64) -> float:
    """Largest stable leapfrog step ``2 / sqrt(lambda_max)`` for the discrete operator."""
    c = mode_equation_coeffs(2, nu)
    return 2.0 / math.sqrt(_spatial_operator_bound(c, dr, m))


def fd_evolve(
    data: ModeInitialData,
    dr: float,
    dt: float,
    T: float,
    r_max: float | None = None,
    save_every: int | None = None,
    n_saves: int | None = None,
) -> ModeSolution:
    """Leapfrog evolution of ``data`` up to time ``T``.

    Args:
        data: mode initial data with ``nu >= 1/2``.
        dr, dt: grid spacing and time step (``dt/dr <= 0.9``).
        T: final time; rounded to a whole number of steps.
        r_max: outer radius; defaults to ``r_b + T + 1`` and must exceed ``r_b + T``.
        save_every: store every ``save_every``-th step (default: about 200 saves).
        n_saves: alternative to ``save_every``.

    Returns:
        A :class:`ModeSolution` with ``method="fd"`` and centered-difference
        velocities at the saved times.
    """
    nu = data.nu
    if nu < 0.5:
        raise UnsupportedError(
            f"fd_evolve needs nu >= 1/2 (got nu={nu}); the attractive potential does not "
            "select the Friedrichs branch, use hankel_evolve instead"
        )
    if not (dr > 0 and dt > 0 and T > 0):
        raise DomainError("dr, dt and T must be positive")
    if dt / dr > CFL_LIMIT:
        raise ConfigError(f"CFL violation: dt/dr = {dt / dr:.4g} exceeds {CFL_LIMIT}")
    r_b = data.support[1]
    if r_max is None:
        r_max = r_b + T + 1.0
    if not r_max > r_b + T:
        raise ConfigError("the outer boundary must lie beyond r_b + T (domain of influence)")
    m = int(math.ceil(r_max / dr))
    c = mode_equation_coeffs(data.n, nu)
    lam_top = _spatial_operator_bound(c, dr, m)
    if dt * dt * lam_top >= 4.0:
        raise ConfigError(
            f"leapfrog unstable: dt = {dt:.4g} exceeds the stability bound "
            f"{2.0 / math.sqrt(lam_top):.4g} set by the tip potential"
        )
    steps = int(round(T / dt))
    if steps < 1:
        raise DomainError("T must span at least one time step")
    if save_every is None:
        save_every = max(1, steps // (n_saves - 1)) if n_saves else max(1, steps // 200)

    r = (np.arange(m) + 0.5) * dr
    pw = r ** ((data.n - 1) / 2.0)
    pot = c / r**2
    inv_dr2 = 1.0 / dr**2

    def accel(v):
        out = np.empty_like(v)
        out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) * inv_dr2
        out[0] = (v[1] - 3.0 * v[0]) * inv_dr2
        out[-1] = (-2.0 * v[-1] + v[-2]) * inv_dr2
        return out - pot * v

    v_prev = pw * np.asarray(data.u0(r), dtype=float)
    v1 = pw * np.asarray(data.u1(r), dtype=float)
    v_cur = v_prev + dt * v1 + 0.5 * dt * dt * accel(v_prev)

    saved_t, saved_u, saved_ut = [0.0], [v_prev / pw], [v1 / pw]
    # v at steps k-1, k; velocity at step k is (v_{k+1} - v_{k-1}) / (2 dt)
    for k in range(1, steps + 1):
        v_next = 2.0 * v_cur - v_prev + dt * dt * accel(v_cur)
        if k % save_every == 0 or k == steps:
            saved_t.append(k * dt)
            saved_u.append(v_cur / pw)
            saved_ut.append((v_next - v_prev) / (2.0 * dt) / pw)
        v_prev, v_cur = v_cur, v_next
    meta = {"dr": dr, "dt": dt, "cfl": dt / dr, "steps": steps, "r_max": float(r[-1]),
            "stability_bound": 2.0 / math.sqrt(lam_top), "data": data.label}
    return ModeSolution(
        nu=nu, n=data.n, t_grid=np.array(saved_t), r_grid=r, values=np.array(saved_u),
        method="fd", velocity=np.array(saved_ut), metadata=meta,
    )
