"""Null bicharacteristics of the cone spacetime and their diffraction at the tip.

Interior flow: for ``g = -dt^2 + dr^2 + r^2 dz^2`` (``z`` is arclength on
the link circle) null geodesics are the projections of the Hamilton flow
of ``H = (-p_t^2 + p_r^2 + p_z^2/r^2)/2`` on ``H = 0``.  ``p_t`` (energy)
and ``p_z`` (angular momentum) are conserved; rays with ``p_z != 0``
turn around at ``r = |p_z/p_t|``, radial rays reach the tip.

Edge coordinates near the tip use ``rho = 1/t``, ``x = r/t`` and the
covector ``tau d rho/(x rho) + xi dx/x + zeta dz``.  Pushing forward
``p_t dt + p_r dr + p_z dz`` gives ``tau = -r (p_t + x p_r)``,
``xi = r p_r``, ``zeta = p_z``.  At ``x = 0`` these vanish, so arrivals at
the tip are represented after dividing the fibre coordinates by ``r``
(a positive rescaling; only the ray in the fibre matters there):
``tau = -p_t``, ``xi = p_r``.

A ray hitting the tip continues from the same time with ``tau`` kept,
``xi`` negated, ``zeta = 0`` and an arbitrary exit angle ``z_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .csvio import write_csv
from .errors import ContractViolation, DomainError, FlowError
from .parallel import ordered_map

__all__ = [
    "InteriorState",
    "PhasePoint",
    "Segment",
    "DiffractionEvent",
    "BrokenTrajectory",
    "R_STOP",
    "interior_flow",
    "to_edge_coords",
    "arrival_point",
    "exit_state",
    "diffract",
    "trace_broken",
    "hamilton_monotonicity",
    "hamilton_xi_hat_rate",
    "xi_hat_flow_derivative",
    "development_map",
    "trajectories_to_csv",
]

#: Radius at which a radial ray is considered to have reached the tip.
R_STOP = 1e-6
NULL_TOL = 1e-10
ON_SHELL_TOL = 1e-8


@dataclass(frozen=True)
class InteriorState:
    """Point ``(t, r, z)`` with covector ``p_t dt + p_r dr + p_z dz``."""

    t: float
    r: float
    z: float
    p_t: float
    p_r: float
    p_z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.t, self.r, self.z, self.p_t, self.p_r, self.p_z])

    @classmethod
    def from_array(cls, a) -> "InteriorState":
        return cls(*(float(v) for v in a))

    def hamiltonian(self) -> float:
        return 0.5 * (-self.p_t**2 + self.p_r**2 + self.p_z**2 / self.r**2)

    def null_defect(self) -> float:
        """``|g^{-1}(p, p)|`` relative to the size of the covector."""
        scale = self.p_t**2 + self.p_r**2 + self.p_z**2 / self.r**2
        return abs(2.0 * self.hamiltonian()) / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class PhasePoint:
    """Edge phase-space point ``(rho, x, z; tau, xi, zeta)``."""

    rho: float
    x: float
    z: float
    tau: float
    xi: float
    zeta: float
    n: int = 2

    def __post_init__(self) -> None:
        if self.rho < 0 or self.x < 0:
            raise DomainError("rho and x must be nonnegative")

    @property
    def principal_symbol(self) -> float:
        """Homogeneous part ``(tau + x xi)^2 - xi^2 - zeta^2``."""
        return (self.tau + self.x * self.xi) ** 2 - self.xi**2 - self.zeta**2

    @property
    def edge_symbol(self) -> float:
        """Full edge symbol including the ``-x^2 (n^2 - 1)/4`` term."""
        return self.principal_symbol - self.x**2 * (self.n**2 - 1) / 4.0

    @property
    def on_shell(self) -> bool:
        scale = self.tau**2 + self.xi**2 + self.zeta**2
        return abs(self.principal_symbol) <= ON_SHELL_TOL * max(scale, 1e-300)


@dataclass(frozen=True)
class Segment:
    """Samples of one interior flow segment.

    ``params`` are affine parameters, ``states`` has columns
    ``t, r, z, p_t, p_r, p_z``.  ``end`` is ``"length"``, ``"cone_point"``
    or ``"domain"``.  ``turning`` holds the states where ``p_r`` changes
    sign from negative to positive (closest approaches to the tip), located
    by the integrator's event detection rather than by the sampling.
    """

    params: np.ndarray
    states: np.ndarray
    end: str
    turning: tuple[InteriorState, ...] = ()

    def state(self, i: int) -> InteriorState:
        return InteriorState.from_array(self.states[i])

    @property
    def final(self) -> InteriorState:
        return self.state(-1)

    def phase_points(self, n: int = 2) -> list[PhasePoint]:
        return [to_edge_coords(self.state(i), n) for i in range(self.params.size)]


@dataclass(frozen=True)
class DiffractionEvent:
    rho0: float
    z_in: float
    tau0: float
    xi_in: float
    exits: tuple[PhasePoint, ...]


@dataclass(frozen=True)
class BrokenTrajectory:
    """Segments joined by diffraction events (``events[i]`` sits between
    ``segments[i]`` and ``segments[i+1]``)."""

    segments: tuple[Segment, ...]
    events: tuple[DiffractionEvent, ...] = field(default=())


def _rhs(_lam, y):
    t, r, z, p_t, p_r, p_z = y
    return [-p_t, p_r, p_z / (r * r), 0.0, p_z * p_z / (r * r * r), 0.0]


def _check_null(state: InteriorState) -> None:
    if not state.r > 0:
        raise DomainError("interior flow needs r > 0")
    if state.null_defect() > NULL_TOL:
        raise DomainError(f"initial covector is not null (relative defect {state.null_defect():.3e})")


def interior_flow(
    start: InteriorState,
    length: float,
    r_stop: float = R_STOP,
    n_samples: int = 201,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    t_range: tuple[float, float] | None = None,
) -> Segment:
    """Integrate the null geodesic flow for affine length ``length``.

    Stops early when ``r`` drops to ``r_stop`` (cone-point approach) or
    ``t`` leaves ``t_range``.  The on-shell condition is not re-imposed
    during the integration.
    """
    _check_null(start)
    if not length > 0:
        raise DomainError("length must be positive")
    events = []

    def hit_tip(_lam, y):
        return y[1] - r_stop

    hit_tip.terminal = True
    hit_tip.direction = -1
    events.append(hit_tip)

    def turn(_lam, y):
        return y[4]

    turn.terminal = False
    turn.direction = 1
    events.append(turn)
    if t_range is not None:
        def leave(_lam, y):
            return min(y[0] - t_range[0], t_range[1] - y[0])

        leave.terminal = True
        leave.direction = -1
        events.append(leave)
    sol = solve_ivp(
        _rhs, (0.0, float(length)), start.as_array(), method="DOP853",
        rtol=rtol, atol=atol, dense_output=True, events=events,
    )
    if sol.status == -1:
        raise FlowError(
            f"geodesic integration failed: {sol.message}",
            {"p_z": start.p_z, "r_min_expected": abs(start.p_z / start.p_t) if start.p_t else None,
             "hint": "rays with p_z != 0 miss the tip; a glancing start needs a smaller step"},
        )
    lam_end = float(sol.t[-1])
    end = "length"
    if sol.status == 1:
        if sol.t_events[0].size:
            end = "cone_point"
        else:
            end = "domain"
    params = np.linspace(0.0, lam_end, max(2, n_samples))
    states = sol.sol(params).T
    states[-1] = sol.y[:, -1]
    turning = tuple(InteriorState.from_array(y) for y in sol.y_events[1])
    return Segment(params, states, end, turning)


def to_edge_coords(state: InteriorState, n: int = 2) -> PhasePoint:
    """Push an interior covector forward to edge coordinates (``t > 0``)."""
    if not state.t > 0:
        raise DomainError("edge coordinates need t > 0")
    rho = 1.0 / state.t
    x = state.r / state.t
    tau = -state.r * (state.p_t + x * state.p_r)
    xi = state.r * state.p_r
    return PhasePoint(rho, x, state.z, tau, xi, state.p_z, n)


def arrival_point(state: InteriorState, n: int = 2) -> PhasePoint:
    """Project the end of a radial segment onto the tip (``x = 0``)."""
    if state.p_z != 0:
        raise ContractViolation("only radial rays (p_z = 0) reach the tip")
    if not state.p_r < 0:
        raise ContractViolation("an arriving ray must be incoming (p_r < 0)")
    t0 = state.t + state.r * state.p_t / state.p_r
    if not t0 > 0:
        raise DomainError("edge coordinates need an arrival time t > 0")
    return PhasePoint(1.0 / t0, 0.0, state.z, -state.p_t, state.p_r, 0.0, n)


def diffract(arrival: PhasePoint, exit_angles) -> DiffractionEvent:
    """Continue an arrival at the tip into one outgoing point per exit angle."""
    if arrival.x != 0 or arrival.zeta != 0:
        raise ContractViolation("arrival must sit at x = 0 with zeta = 0")
    scale = max(arrival.tau**2, arrival.xi**2, 1e-300)
    if abs(arrival.tau**2 - arrival.xi**2) > ON_SHELL_TOL * scale:
        raise ContractViolation("arrival is off shell: tau^2 != xi^2")
    tau0 = arrival.tau
    xi_out = -arrival.xi
    exits = tuple(
        PhasePoint(arrival.rho, 0.0, float(z1), tau0, xi_out, 0.0, arrival.n) for z1 in exit_angles
    )
    return DiffractionEvent(arrival.rho, arrival.z, tau0, arrival.xi, exits)


def exit_state(p: PhasePoint, r_start: float = R_STOP) -> InteriorState:
    """Interior state a distance ``r_start`` along the outgoing ray of an exit point."""
    if p.x != 0:
        raise ContractViolation("exit points sit at x = 0")
    p_t = -p.tau
    p_r = p.xi
    if not p_r > 0:
        raise ContractViolation("an exit ray must be outgoing (xi > 0)")
    t = 1.0 / p.rho + r_start * (-p_t) / p_r
    return InteriorState(t, r_start, p.z, p_t, p_r, 0.0)


def trace_broken(
    start: InteriorState,
    length: float,
    n_exit_samples: int,
    alpha: float = 1.0,
    r_stop: float = R_STOP,
    n_samples: int = 201,
    n: int = 2,
) -> list[BrokenTrajectory]:
    """Flow, diffract at the tip if reached, and flow each exit.

    Exit angles are ``z_in + 2 pi alpha k / n_exit_samples`` (reduced modulo
    the link length ``2 pi alpha``).  One trajectory per exit is returned;
    a ray that misses the tip yields a single one-segment trajectory.
    """
    if n_exit_samples < 1:
        raise DomainError("n_exit_samples must be positive")
    first = interior_flow(start, length, r_stop, n_samples)
    if first.end != "cone_point":
        return [BrokenTrajectory((first,), ())]
    final = first.final
    arrival = arrival_point(final, n)
    period = 2.0 * math.pi * alpha
    angles = [math.fmod(arrival.z + period * k / n_exit_samples, period) for k in range(n_exit_samples)]
    event = diffract(arrival, angles)
    used = first.params[-1] + 2.0 * final.r / abs(final.p_r)
    remaining = length - used
    if remaining <= 0:
        return [BrokenTrajectory((first,), (event,))]

    def branch(exit_point):
        seg = interior_flow(exit_state(exit_point, final.r), remaining, r_stop=0.5 * final.r,
                            n_samples=n_samples)
        return BrokenTrajectory((first, seg), (event,))

    return ordered_map(branch, event.exits)


def hamilton_monotonicity(p: PhasePoint) -> float:
    """``(xi^2 + zeta^2) / (|tau| x^2)``."""
    if not p.x > 0:
        raise DomainError("hamilton_monotonicity needs x > 0")
    if p.tau == 0:
        raise DomainError("hamilton_monotonicity needs tau != 0")
    return (p.xi**2 + p.zeta**2) / (abs(p.tau) * p.x**2)


def hamilton_xi_hat_rate(p: PhasePoint) -> float:
    """Exact ``(1/2) H_{p0}(-xi/|tau|)`` for ``p0 = ((tau + x xi)^2 - xi^2 - zeta^2)/x^2``.

    Equals ``(xi (tau + x xi)/x + zeta^2/x^2) / |tau|``; it coincides with
    :func:`hamilton_monotonicity` where ``xi = 0``.
    """
    if not p.x > 0:
        raise DomainError("needs x > 0")
    if p.tau == 0:
        raise DomainError("needs tau != 0")
    return (p.xi * (p.tau + p.x * p.xi) / p.x + p.zeta**2 / p.x**2) / abs(p.tau)


def xi_hat_flow_derivative(segment: Segment, n: int = 2) -> np.ndarray:
    """Finite-difference derivative of ``-xi/|tau|`` along ``H_{p0}``.

    ``H_{p0} = -2 t^2 d/d(lambda)`` on the null set, where ``lambda`` is
    the affine parameter of the segment.
    """
    pts = segment.phase_points(n)
    f = np.array([-p.xi / abs(p.tau) for p in pts])
    dfdl = np.gradient(f, segment.params, edge_order=2)
    t = segment.states[:, 0]
    return -2.0 * t * t * dfdl


def development_map(segment: Segment, alpha: float = 1.0) -> np.ndarray:
    """Unroll ``(r, z)`` to the plane: ``(r cos(z), r sin(z))`` (arclength ``z``)."""
    r = segment.states[:, 1]
    z = segment.states[:, 2]
    return np.column_stack([r * np.cos(z), r * np.sin(z)])


def trajectories_to_csv(trajectories, path: str | Path) -> Path:
    """Write ``trajectory, segment, parameter, t, r, z, p_t, p_r, p_z`` rows."""
    rows = []
    for k, traj in enumerate(trajectories):
        for sid, seg in enumerate(traj.segments):
            for lam, st in zip(seg.params, seg.states):
                rows.append([k, sid, lam, *st])
    header = ("trajectory", "segment", "parameter", "t", "r", "z", "p_t", "p_r", "p_z")
    return write_csv(path, header, rows)
