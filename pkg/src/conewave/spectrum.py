"""Link spectra and the resonance ladder of a product cone.

A product cone ``C(Z) = (0, inf) x Z`` with metric ``dr^2 + r^2 k`` has
one angular mode per eigenvalue ``mu_j^2`` of the link Laplacian.  Each
mode carries the order

    nu_j = sqrt(((n - 2)/2)^2 + mu_j^2)

and a ladder of resonances ``sigma_{j,k} = -i (1/2 + k + nu_j)``,
``k = 0, 1, ...``.  The radiation field then decays through the real
exponents ``lambda = 1/2 + k + nu_j``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .csvio import write_csv
from .errors import DomainError

__all__ = [
    "LinkSpectrum",
    "Resonance",
    "ResonanceLadder",
    "ExponentEntry",
    "circle_spectrum",
    "explicit_spectrum",
    "merge_duplicates",
    "load_spectrum_json",
    "nu_of",
    "is_half_integer",
    "resonances",
    "exponent_ladder",
    "mode_ladder",
    "ladder_to_csv",
    "LADDER_CSV_HEADER",
]

#: Tolerance used to decide whether a computed order is a half-integer.
HALF_INTEGER_TOL = 1e-12
#: Relative tolerance used to merge decay rates that coincide up to round-off.
EXPONENT_MERGE_TOL = 1e-12

LADDER_CSV_HEADER = ("j", "k", "nu", "im_sigma", "multiplicity", "excluded")


@dataclass(frozen=True)
class LinkSpectrum:
    """Eigenvalues of the link Laplacian with their multiplicities.

    Attributes:
        entries: ``(mu_sq, multiplicity)`` pairs, strictly increasing in
            ``mu_sq`` and starting with ``(0, 1)``.
        source: ``"circle"`` or ``"explicit"``.
        alpha: radius of the circle link (only for ``source="circle"``);
            the cone angle is ``2 pi alpha``.
    """

    entries: tuple[tuple[float, int], ...]
    source: str = "explicit"
    alpha: float | None = None

    def __post_init__(self) -> None:
        entries = tuple((float(m), int(k)) for m, k in self.entries)
        object.__setattr__(self, "entries", entries)
        if self.source not in ("circle", "explicit"):
            raise DomainError(f"unknown spectrum source {self.source!r}")
        if self.source == "circle" and (self.alpha is None or not self.alpha > 0):
            raise DomainError("circle spectra need a positive alpha")
        if not entries:
            raise DomainError("a link spectrum needs at least the constant mode")
        if entries[0] != (0.0, 1):
            raise DomainError(
                "the first entry must be (0, 1): a connected link has a simple zero eigenvalue"
            )
        for (m0, _), (m1, _) in zip(entries, entries[1:]):
            if not m1 > m0:
                raise DomainError(
                    "entries must be strictly increasing in mu_sq; merge duplicates first"
                )
        for m, k in entries:
            if not (math.isfinite(m) and m >= 0):
                raise DomainError(f"eigenvalue {m!r} must be finite and nonnegative")
            if k < 1:
                raise DomainError(f"multiplicity {k!r} must be a positive integer")

    def __len__(self) -> int:
        return len(self.entries)

    def mu_sq(self, j: int) -> float:
        return self.entries[j][0]

    def multiplicity(self, j: int) -> int:
        return self.entries[j][1]


def circle_spectrum(alpha: float, j_max: int) -> LinkSpectrum:
    """Spectrum of the circle of radius ``alpha`` up to index ``j_max``.

    The eigenvalues are ``j^2 / alpha^2``; the nonzero ones are double
    (``cos`` and ``sin`` modes).
    """
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"alpha must be a positive real, got {alpha!r}")
    if int(j_max) != j_max or j_max < 0:
        raise DomainError(f"j_max must be a nonnegative integer, got {j_max!r}")
    alpha = float(alpha)
    entries = tuple((j * j / (alpha * alpha), 1 if j == 0 else 2) for j in range(int(j_max) + 1))
    return LinkSpectrum(entries=entries, source="circle", alpha=alpha)


def explicit_spectrum(pairs: Iterable[Sequence[float]]) -> LinkSpectrum:
    """Build a spectrum from user supplied ``[mu_sq, multiplicity]`` pairs.

    The pairs must already be sorted and free of duplicates; use
    :func:`merge_duplicates` to combine repeated eigenvalues.
    """
    entries = []
    for pair in pairs:
        if len(pair) != 2:
            raise DomainError(f"expected [mu_sq, multiplicity], got {pair!r}")
        mu_sq, mult = pair
        if isinstance(mult, float):
            if not mult.is_integer():
                raise DomainError(f"multiplicity must be an integer, got {mult!r}")
        entries.append((float(mu_sq), int(mult)))
    return LinkSpectrum(entries=tuple(entries), source="explicit")


def merge_duplicates(pairs: Iterable[Sequence[float]]) -> list[tuple[float, int]]:
    """Sort ``(mu_sq, multiplicity)`` pairs and add up exact repeats."""
    merged: dict[float, int] = {}
    for mu_sq, mult in pairs:
        merged[float(mu_sq)] = merged.get(float(mu_sq), 0) + int(mult)
    return sorted(merged.items())


def load_spectrum_json(path: str | Path) -> LinkSpectrum:
    """Load an explicit spectrum stored as a JSON array of pairs."""
    path = Path(path)
    if not path.is_file():
        raise DomainError(f"spectrum file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, list):
        raise DomainError(f"{path}: expected a JSON array of [mu_sq, multiplicity] pairs")
    return explicit_spectrum(data)


def nu_of(n: int, mu_sq: float) -> float:
    """Order ``nu = sqrt(((n-2)/2)^2 + mu_sq)`` of a mode."""
    if int(n) != n or n < 2:
        raise DomainError(f"cone dimension n must be an integer >= 2, got {n!r}")
    if not mu_sq >= 0:
        raise DomainError(f"mu_sq must be nonnegative, got {mu_sq!r}")
    half = (n - 2) / 2.0
    return math.sqrt(half * half + mu_sq)


def is_half_integer(nu: float, tol: float = HALF_INTEGER_TOL) -> bool:
    """True when ``nu`` lies in ``1/2 + Z`` up to ``tol`` (relative above 1)."""
    shifted = nu - 0.5
    return abs(shifted - round(shifted)) <= tol * max(1.0, abs(nu))


@dataclass(frozen=True)
class Resonance:
    """One resonance ``sigma_{j,k} = -i (1/2 + k + nu_j)``."""

    j: int
    k: int
    nu: float
    multiplicity: int
    excluded: bool

    @property
    def decay(self) -> float:
        """Real decay exponent ``lambda = 1/2 + k + nu``."""
        return 0.5 + self.k + self.nu

    @property
    def sigma(self) -> complex:
        return complex(0.0, -self.decay)


@dataclass(frozen=True)
class ResonanceLadder:
    """All resonances with ``Im sigma > -strip_depth``, slowest decay first."""

    cone_dim: int
    items: tuple[Resonance, ...]
    strip_depth: float

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def resonances(n: int, spec: LinkSpectrum, strip_depth: float) -> ResonanceLadder:
    """Enumerate the resonances of the cone inside a strip.

    Every pair ``(j, k)`` with ``1/2 + k + nu_j < strip_depth`` appears
    exactly once.  Resonances whose order is a half-integer are kept and
    flagged as ``excluded``: the closed formula is not claimed to hold
    there, and downstream consumers decide what to do with them.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"cone dimension n must be an integer >= 2, got {n!r}")
    if not (math.isfinite(strip_depth) and strip_depth > 0):
        raise DomainError(f"strip_depth must be a positive real, got {strip_depth!r}")
    items = []
    for j, (mu_sq, mult) in enumerate(spec.entries):
        nu = nu_of(n, mu_sq)
        excluded = is_half_integer(nu)
        k = 0
        while 0.5 + k + nu < strip_depth:
            items.append(Resonance(j=j, k=k, nu=nu, multiplicity=mult, excluded=excluded))
            k += 1
    items.sort(key=lambda res: (res.decay, res.j, res.k))
    return ResonanceLadder(cone_dim=int(n), items=tuple(items), strip_depth=float(strip_depth))


def mode_ladder(ladder: ResonanceLadder, j: int) -> ResonanceLadder:
    """Restrict a ladder to the resonances of the single mode ``j``."""
    items = tuple(res for res in ladder.items if res.j == j)
    return ResonanceLadder(cone_dim=ladder.cone_dim, items=items, strip_depth=ladder.strip_depth)


@dataclass(frozen=True)
class ExponentEntry:
    """A distinct decay rate with its total multiplicity."""

    decay: float
    multiplicity: int
    log_flag: bool
    sources: tuple[tuple[int, int], ...] = field(default=(), compare=False)

    def __iter__(self):
        # Allows ``lam, mult, flag = entry``.
        return iter((self.decay, self.multiplicity, self.log_flag))


def exponent_ladder(ladder: ResonanceLadder) -> list[ExponentEntry]:
    """Merge a resonance ladder into distinct real decay exponents.

    ``log_flag`` is raised when two different ``(j, k)`` pairs land on the
    same exponent, or when any contributing resonance is excluded; both
    situations can produce logarithmic terms in the expansion.
    """
    if len(ladder.items) == 0:
        raise DomainError("exponent_ladder needs a nonempty ladder")
    groups: list[list[Resonance]] = []
    for res in ladder.items:  # already sorted by decay
        if groups:
            ref = groups[-1][0].decay
            if abs(res.decay - ref) <= EXPONENT_MERGE_TOL * max(1.0, ref):
                groups[-1].append(res)
                continue
        groups.append([res])
    out = []
    for group in groups:
        pairs = tuple((res.j, res.k) for res in group)
        log_flag = len(set(pairs)) > 1 or any(res.excluded for res in group)
        out.append(
            ExponentEntry(
                decay=group[0].decay,
                multiplicity=sum(res.multiplicity for res in group),
                log_flag=log_flag,
                sources=pairs,
            )
        )
    return out


def ladder_to_csv(ladder: ResonanceLadder, path: str | Path) -> Path:
    """Write the ladder with columns ``j,k,nu,im_sigma,multiplicity,excluded``."""
    rows = [
        (res.j, res.k, res.nu, res.sigma.imag, res.multiplicity, res.excluded)
        for res in ladder.items
    ]
    return write_csv(path, LADDER_CSV_HEADER, rows)
