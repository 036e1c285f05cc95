"""Charts of the compactified cone spacetime and the rescaled wave operator.

The spacetime is ``R_t x C(Z)`` with metric ``g = -dt^2 + dr^2 + r^2 k``.
Fields are single angular modes, so the link Laplacian acts as
multiplication by ``mu^2`` and only the ``(t, r)`` dependence is sampled.

Charts used here:

* ``regionII`` - ``rho = (t^2 + r^2)^{-1/2}``, ``v = cos(2 theta)`` with
  ``theta = atan2(r, t)``.  ``v`` does not see the sign of ``t``, so the
  chart point stores a ``branch`` (+1 for ``t >= 0``, -1 otherwise).
* ``regionIII`` - ``rho = 1/t``, ``x = r/t`` (future side ``t > 0``).
* ``almost_global`` - ``t = cos(theta)/rho``, ``r = sin(theta)/rho``.
* ``blowup`` - ``rho_bar = (1 + t^2 + r^2)^{-1/2}``, ``s = t - r`` near
  future null infinity (``t + r > 0``).

The operator ``L = rho^{-2-a} Box rho^{a}`` with ``a = (n-1)/2`` is
evaluated with centered second-order differences, and its Mellin
conjugate ``P_sigma`` (``rho d_rho -> i sigma``) on the boundary.
Derivatives are written with ``d = d/d(coordinate)``; the momentum
operators ``D = -i d`` only appear through the substitution
``rho D_rho -> sigma``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import DomainError
from .spectrum import LinkSpectrum

__all__ = [
    "Chart",
    "ConeConfig",
    "InteriorPoint",
    "ChartPoint",
    "MetricComponents",
    "GridSpec",
    "compactify",
    "region_of",
    "to_chart",
    "from_chart",
    "to_regionII",
    "to_regionIII",
    "to_almost_global",
    "to_blowup",
    "chart_jacobian",
    "metric_components",
    "minkowski_cone_metric",
    "apply_L",
    "apply_P_sigma",
    "sample_chart_field",
    "box_tr",
    "box_via_chart",
]


class Chart(str, Enum):
    REGION_II = "regionII"
    REGION_III = "regionIII"
    ALMOST_GLOBAL = "almost_global"
    BLOWUP = "blowup"


_COORD_NAMES = {
    Chart.REGION_II: ("rho", "v"),
    Chart.REGION_III: ("rho", "x"),
    Chart.ALMOST_GLOBAL: ("rho", "theta"),
    Chart.BLOWUP: ("rho_bar", "s"),
}


@dataclass(frozen=True)
class ConeConfig:
    """Dimension of the cone ``C(Z)`` (spacetime dimension ``n + 1``) and its link."""

    n: int
    link: LinkSpectrum

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"cone dimension n must be an integer >= 2, got {self.n!r}")


@dataclass(frozen=True)
class InteriorPoint:
    """A point ``(t, r, z)`` of the spacetime with ``r > 0``."""

    t: float
    r: float
    z: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t) and math.isfinite(self.r)):
            raise DomainError("interior point coordinates must be finite")
        if not self.r > 0:
            raise DomainError(f"interior points need r > 0, got r={self.r!r}")


@dataclass(frozen=True)
class ChartPoint:
    """Coordinates ``(c1, c2, z)`` of a point in one of the charts.

    ``branch`` is only meaningful for ``regionII`` where it records the
    sign of ``t`` lost by ``v = cos(2 theta)``.
    """

    chart: Chart
    c1: float
    c2: float
    z: float = 0.0
    branch: int = 1

    def __post_init__(self) -> None:
        chart = Chart(self.chart)
        object.__setattr__(self, "chart", chart)
        if self.branch not in (1, -1):
            raise DomainError("branch must be +1 or -1")
        c1, c2 = self.c1, self.c2
        if chart in (Chart.REGION_II, Chart.REGION_III, Chart.ALMOST_GLOBAL) and not c1 > 0:
            raise DomainError(f"{chart.value}: rho must be positive, got {c1!r}")
        if chart is Chart.REGION_II and not abs(c2) <= 1:
            raise DomainError(f"regionII: |v| <= 1 required, got v={c2!r}")
        if chart is Chart.REGION_III and not c2 >= 0:
            raise DomainError(f"regionIII: x >= 0 required, got x={c2!r}")
        if chart is Chart.ALMOST_GLOBAL and not 0 <= c2 <= math.pi:
            raise DomainError(f"almost_global: theta in [0, pi] required, got {c2!r}")
        if chart is Chart.BLOWUP and not 0 < c1 <= 1:
            raise DomainError(f"blowup: rho_bar in (0, 1] required, got {c1!r}")

    @property
    def names(self) -> tuple[str, str]:
        return _COORD_NAMES[self.chart]

    def as_dict(self) -> dict:
        a, b = self.names
        return {"chart": self.chart.value, a: self.c1, b: self.c2, "z": self.z}


@dataclass(frozen=True)
class MetricComponents:
    """Metric matrix in a chart basis ``(d c1, d c2, dz)``.

    ``degenerate`` is set on the boundary faces where the coordinate
    expression blows up; the matrix then contains non-finite entries.
    """

    g: np.ndarray
    degenerate: bool


def compactify(p: InteriorPoint) -> tuple[float, float]:
    """Radial compactification ``(t, r) -> (t, r, 1)/sqrt(1 + t^2 + r^2)``.

    Returns ``(z2, z3)``: ``z2`` defines the cone face, ``z3`` the main face.
    """
    norm = math.sqrt(1.0 + p.t * p.t + p.r * p.r)
    return p.r / norm, 1.0 / norm


def region_of(p: InteriorPoint) -> frozenset[str]:
    """Names of all (overlapping) regions containing ``p``."""
    t, r = abs(p.t), p.r
    out = set()
    if t <= 10 and r <= 10:
        out.add("I")
    if r >= 2 and r >= t / 2:
        out.add("II")
    if t >= 2 and t >= r / 2:
        out.add("III")
    return frozenset(out)


def to_regionII(p: InteriorPoint) -> ChartPoint:
    big = math.hypot(p.t, p.r)
    v = (p.t - p.r) * (p.t + p.r) / (big * big)
    return ChartPoint(Chart.REGION_II, 1.0 / big, max(-1.0, min(1.0, v)), p.z, 1 if p.t >= 0 else -1)


def to_regionIII(p: InteriorPoint) -> ChartPoint:
    if not p.t > 0:
        raise DomainError(f"regionIII chart needs t > 0, got t={p.t!r} (use time reflection)")
    return ChartPoint(Chart.REGION_III, 1.0 / p.t, p.r / p.t, p.z)


def to_almost_global(p: InteriorPoint) -> ChartPoint:
    big = math.hypot(p.t, p.r)
    return ChartPoint(Chart.ALMOST_GLOBAL, 1.0 / big, math.atan2(p.r, p.t), p.z)


def to_blowup(p: InteriorPoint) -> ChartPoint:
    if not p.t + p.r > 0:
        raise DomainError("blowup chart covers t + r > 0 only")
    rho_bar = 1.0 / math.sqrt(1.0 + p.t * p.t + p.r * p.r)
    return ChartPoint(Chart.BLOWUP, rho_bar, p.t - p.r, p.z)


_TO = {
    Chart.REGION_II: to_regionII,
    Chart.REGION_III: to_regionIII,
    Chart.ALMOST_GLOBAL: to_almost_global,
    Chart.BLOWUP: to_blowup,
}


def to_chart(chart: Chart | str, p: InteriorPoint) -> ChartPoint:
    return _TO[Chart(chart)](p)


def from_chart(cp: ChartPoint) -> InteriorPoint:
    """Inverse of :func:`to_chart`."""
    chart, a, b = cp.chart, cp.c1, cp.c2
    if chart is Chart.REGION_II:
        r = math.sqrt(max(0.0, (1.0 - b) / 2.0)) / a
        t = cp.branch * math.sqrt(max(0.0, (1.0 + b) / 2.0)) / a
    elif chart is Chart.REGION_III:
        t, r = 1.0 / a, b / a
    elif chart is Chart.ALMOST_GLOBAL:
        t, r = math.cos(b) / a, math.sin(b) / a
    else:
        q = 1.0 / (a * a) - 1.0
        disc = 2.0 * q - b * b
        if disc < 0:
            raise DomainError("blowup coordinates outside the image of the chart")
        d = math.sqrt(disc)
        r = (d - b) / 2.0
        t = (d + b) / 2.0
    return InteriorPoint(t, r, cp.z)


def chart_jacobian(chart: Chart | str, p: InteriorPoint) -> np.ndarray:
    """Matrix ``d(c1, c2, z)/d(t, r, z)`` of a chart at ``p``."""
    chart = Chart(chart)
    t, r = p.t, p.r
    jac = np.zeros((3, 3))
    jac[2, 2] = 1.0
    if chart is Chart.REGION_II:
        big2 = t * t + r * r
        rho3 = big2 ** -1.5
        jac[0, :2] = (-t * rho3, -r * rho3)
        jac[1, :2] = (4 * t * r * r / big2**2, -4 * r * t * t / big2**2)
    elif chart is Chart.REGION_III:
        if not t > 0:
            raise DomainError("regionIII chart needs t > 0")
        jac[0, :2] = (-1.0 / t**2, 0.0)
        jac[1, :2] = (-r / t**2, 1.0 / t)
    elif chart is Chart.ALMOST_GLOBAL:
        big2 = t * t + r * r
        rho3 = big2 ** -1.5
        jac[0, :2] = (-t * rho3, -r * rho3)
        jac[1, :2] = (-r / big2, t / big2)
    else:
        rb3 = (1.0 + t * t + r * r) ** -1.5
        jac[0, :2] = (-t * rb3, -r * rb3)
        jac[1, :2] = (1.0, -1.0)
    return jac


def metric_components(cp: ChartPoint, link_metric: float = 1.0) -> MetricComponents:
    """Components of ``g`` in the ``regionII`` or ``regionIII`` coordinate basis.

    ``link_metric`` is the ``dz^2`` coefficient of the link metric ``k``;
    it is 1 when ``z`` is arclength on the link circle.
    """
    rho, c = cp.c1, cp.c2
    g = np.zeros((3, 3))
    with np.errstate(divide="ignore", invalid="ignore"):
        if cp.chart is Chart.REGION_II:
            v = c
            degenerate = rho == 0 or abs(v) == 1
            g[0, 0] = -v / rho**4
            g[0, 1] = g[1, 0] = 1.0 / (2 * rho**3)
            g[1, 1] = v / (4 * (1 - v * v) * rho**2) if abs(v) < 1 else math.inf
            g[2, 2] = (1 - v) / (2 * rho**2) * link_metric
        elif cp.chart is Chart.REGION_III:
            x = c
            degenerate = rho == 0 or x == 0
            g[0, 0] = -(1 - x * x) / rho**4
            g[0, 1] = g[1, 0] = -x / rho**3
            g[1, 1] = 1.0 / rho**2
            g[2, 2] = x * x / rho**2 * link_metric
        else:
            raise DomainError("metric_components is defined for regionII and regionIII charts")
    return MetricComponents(g=g, degenerate=bool(degenerate))


def minkowski_cone_metric(p: InteriorPoint, link_metric: float = 1.0) -> np.ndarray:
    """``-dt^2 + dr^2 + r^2 k`` in the basis ``(dt, dr, dz)``."""
    return np.diag([-1.0, 1.0, p.r * p.r * link_metric])


# ---------------------------------------------------------------------------
# Operators on sampled fields


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: node ``i`` along axis ``d`` sits at ``origin[d] + i*spacing[d]``."""

    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if not len(self.origin) == len(self.spacing) == len(self.shape):
            raise DomainError("origin, spacing and shape must have equal lengths")
        if any(not h > 0 for h in self.spacing):
            raise DomainError("grid spacing must be positive")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def axis(self, d: int) -> np.ndarray:
        return self.origin[d] + self.spacing[d] * np.arange(self.shape[d])

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.axis(d) for d in range(self.ndim)), indexing="ij"))

    def index_of(self, point: tuple[float, ...], margin: int = 1) -> tuple[int, ...]:
        """Index of the node at ``point``; raises if it is not a node or too close to the edge."""
        idx = []
        for d, value in enumerate(point):
            pos = (value - self.origin[d]) / self.spacing[d]
            i = int(round(pos))
            if abs(pos - i) > 1e-6:
                raise DomainError(f"point {point!r} is not a grid node along axis {d}")
            if i < margin or i > self.shape[d] - 1 - margin:
                raise DomainError(
                    f"stencil at {point!r} exceeds the grid along axis {d} (index {i} of {self.shape[d]})"
                )
            idx.append(i)
        return tuple(idx)

    def to_json(self) -> str:
        return json.dumps(
            {"origin": list(self.origin), "spacing": list(self.spacing), "shape": list(self.shape)},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "GridSpec":
        data = json.loads(text)
        return cls(tuple(data["origin"]), tuple(data["spacing"]), tuple(data["shape"]))


def _check_field(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise DomainError(f"field shape {values.shape} does not match grid shape {grid.shape}")
    return values


def _derivatives_2d(f: np.ndarray, grid: GridSpec, i: int, j: int):
    h1, h2 = grid.spacing
    f_a = (f[i + 1, j] - f[i - 1, j]) / (2 * h1)
    f_b = (f[i, j + 1] - f[i, j - 1]) / (2 * h2)
    f_aa = (f[i + 1, j] - 2 * f[i, j] + f[i - 1, j]) / (h1 * h1)
    f_bb = (f[i, j + 1] - 2 * f[i, j] + f[i, j - 1]) / (h2 * h2)
    f_ab = (f[i + 1, j + 1] - f[i + 1, j - 1] - f[i - 1, j + 1] + f[i - 1, j - 1]) / (4 * h1 * h2)
    return f[i, j], f_a, f_b, f_aa, f_bb, f_ab


def _scalar(value):
    value = complex(value)
    return value.real if value.imag == 0 else value


def apply_L(
    chart: Chart | str,
    f: np.ndarray,
    grid: GridSpec,
    point: tuple[float, float],
    n: int,
    mu_sq: float = 0.0,
):
    """Evaluate ``L f`` at a grid node using centered differences.

    ``grid`` axes are ``(rho, v)`` for ``regionII`` and ``(rho, x)`` for
    ``regionIII``.  The result is real for real ``f`` and complex for
    complex ``f``.
    """
    chart = Chart(chart)
    if grid.ndim != 2:
        raise DomainError("apply_L needs a two-dimensional (rho, .) grid")
    f = _check_field(f, grid)
    i, j = grid.index_of(point)
    rho, c = point
    f0, f_r, f_c, f_rr, f_cc, f_rc = _derivatives_2d(f, grid, i, j)
    if chart is Chart.REGION_III:
        x = c
        if not x > 0:
            raise DomainError("regionIII operator is singular at x = 0")
        out = (
            -rho * rho * f_rr
            - 2 * rho * x * f_rc
            + (1 - x * x) * f_cc
            - (n + 1) * rho * f_r
            + ((n - 1) / x - (n + 1) * x) * f_c
            - (mu_sq / (x * x) + (n * n - 1) / 4.0) * f0
        )
    elif chart is Chart.REGION_II:
        v = c
        if not abs(v) < 1:
            raise DomainError("regionII operator is singular at |v| = 1")
        out = (
            -v * rho * rho * f_rr
            + 4 * rho * (1 - v * v) * f_rc
            + 4 * v * (1 - v * v) * f_cc
            - ((n - 1) + (n + 2) * v) * rho * f_r
            + 2 * (2 - (n - 1) * v - (n + 3) * v * v) * f_c
            - (2 * mu_sq / (1 - v) + (n - 1) ** 2 / 2.0 + (n - 1) * (n + 3) * v / 4.0) * f0
        )
    else:
        raise DomainError("apply_L is defined for regionII and regionIII charts")
    return _scalar(out)


def apply_P_sigma(
    chart: Chart | str,
    sigma: complex,
    g: np.ndarray,
    grid: GridSpec,
    point: float,
    n: int,
    mu_sq: float = 0.0,
) -> complex:
    """Evaluate the reduced normal operator ``P_sigma g`` at a boundary grid node.

    ``P_sigma`` is ``L`` with ``rho d_rho`` replaced by ``i sigma``, so that
    ``L(rho^{i sigma} g) = rho^{i sigma} P_sigma g``.
    """
    chart = Chart(chart)
    if grid.ndim != 1:
        raise DomainError("apply_P_sigma needs a one-dimensional boundary grid")
    g = _check_field(g, grid)
    (i,) = grid.index_of((point,))
    h = grid.spacing[0]
    g0 = g[i]
    g_c = (g[i + 1] - g[i - 1]) / (2 * h)
    g_cc = (g[i + 1] - 2 * g[i] + g[i - 1]) / (h * h)
    s = complex(sigma)
    if chart is Chart.REGION_III:
        x = float(point)
        if not x > 0:
            raise DomainError("regionIII operator is singular at x = 0")
        out = (
            (1 - x * x) * g_cc
            + ((n - 1) / x - (n + 1) * x - 2j * s * x) * g_c
            + (s * s - 1j * n * s - mu_sq / (x * x) - (n * n - 1) / 4.0) * g0
        )
    elif chart is Chart.REGION_II:
        v = float(point)
        if not abs(v) < 1:
            raise DomainError("regionII operator is singular at |v| = 1")
        out = (
            4 * v * (1 - v * v) * g_cc
            + (2 * (2 - (n - 1) * v - (n + 3) * v * v) + 4j * s * (1 - v * v)) * g_c
            + (
                v * s * s
                - 1j * s * ((n - 1) + (n + 1) * v)
                - 2 * mu_sq / (1 - v)
                - (n - 1) ** 2 / 2.0
                - (n - 1) * (n + 3) * v / 4.0
            )
            * g0
        )
    else:
        raise DomainError("apply_P_sigma is defined for regionII and regionIII charts")
    return complex(out)


def sample_chart_field(
    chart: Chart | str,
    u: Callable[[np.ndarray, np.ndarray], np.ndarray],
    grid: GridSpec,
    n: int,
    branch: int = 1,
) -> np.ndarray:
    """Sample ``rho^{-(n-1)/2} u(t, r)`` on a chart grid.

    This is the field ``f`` whose ``L f`` equals ``rho^{-2-(n-1)/2} Box u``.
    """
    chart = Chart(chart)
    a_grid, c_grid = grid.mesh()
    if chart is Chart.REGION_III:
        t = 1.0 / a_grid
        r = c_grid / a_grid
    elif chart is Chart.REGION_II:
        r = np.sqrt(np.clip((1 - c_grid) / 2, 0, None)) / a_grid
        t = branch * np.sqrt(np.clip((1 + c_grid) / 2, 0, None)) / a_grid
    else:
        raise DomainError("sampling is implemented for regionII and regionIII charts")
    return a_grid ** (-(n - 1) / 2.0) * u(t, r)


def box_tr(
    u: Callable[[np.ndarray, np.ndarray], np.ndarray],
    t: float,
    r: float,
    h: float,
    n: int,
    mu_sq: float = 0.0,
) -> float:
    """Mode wave operator ``-u_tt + u_rr + (n-1)/r u_r - mu^2/r^2 u`` by centered differences."""
    if not r > h:
        raise DomainError("box_tr stencil reaches r <= 0")
    u0 = u(np.float64(t), np.float64(r))
    u_tt = (u(t + h, r) - 2 * u0 + u(t - h, r)) / (h * h)
    u_rr = (u(t, r + h) - 2 * u0 + u(t, r - h)) / (h * h)
    u_r = (u(t, r + h) - u(t, r - h)) / (2 * h)
    return float(-u_tt + u_rr + (n - 1) / r * u_r - mu_sq / (r * r) * u0)


def box_via_chart(
    chart: Chart | str,
    u: Callable[[np.ndarray, np.ndarray], np.ndarray],
    p: InteriorPoint,
    h: float,
    n: int,
    mu_sq: float = 0.0,
) -> float:
    """Recover ``Box u`` at ``p`` from ``L`` in a chart: ``rho^{2+a} L(rho^{-a} u)``.

    The chart grid is a 3x3 stencil of spacing ``h`` (in both chart
    coordinates) centred on the image of ``p``.
    """
    chart = Chart(chart)
    cp = to_chart(chart, p)
    grid = GridSpec((cp.c1 - h, cp.c2 - h), (h, h), (3, 3))
    f = sample_chart_field(chart, u, grid, n, branch=cp.branch)
    value = apply_L(chart, f, grid, (cp.c1, cp.c2), n, mu_sq)
    a = (n - 1) / 2.0
    return float(np.real(cp.c1 ** (2 + a) * value))
