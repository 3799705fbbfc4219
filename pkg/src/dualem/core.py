"""Shared domain types, constants and geometry validation.

Every length is in metres, every frequency in hertz. The default sensor is a
pair of flat spiral coils printed side by side on FR-4; radii and turn counts
are estimates (see ``ESTIMATED_DEFAULTS``) because only the track width, track
gap, nearest-trace separation and centre spacing of the physical sensor are
known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class PhysicalConstants:
    mu_0: float = 4e-7 * math.pi
    eps_0: float = 8.854e-12


CONSTANTS = PhysicalConstants()
MU_0 = CONSTANTS.mu_0
EPS_0 = CONSTANTS.eps_0

COPPER_CONDUCTIVITY = 5.8e7
COPPER_RESISTIVITY = 1.0 / COPPER_CONDUCTIVITY

# Values measured on the physical sensor at 100 kHz. Kept as metadata only.
BENCH_MEASUREMENTS = {
    "self_inductance_H": 320e-9,
    "mutual_inductance_H": 20e-9,
    "direct_capacitance_F": 1.56e-12,
}

# Parameters that are not known for the physical sensor and were chosen here.
ESTIMATED_DEFAULTS = {
    "geometry": "turn count and radii of the spiral pair",
    "extrusion_length": "out-of-plane length of the 2-D cross-section",
    "instrument": "analyser input impedance Zs, R1, R2",
    "ferrite": "ferrite permeability, permittivity and effective layer thickness",
}


class DualEMError(Exception):
    """Base class for all solver-level failures."""


class DomainError(DualEMError, ValueError):
    """An argument lies outside the domain of an operation."""


class GeometryError(DualEMError, ValueError):
    """A geometry is invalid or degenerate for the requested solver."""


class ConvergenceError(DualEMError):
    """A quadrature did not settle within its refinement budget."""

    def __init__(self, message, previous, last):
        super().__init__(f"{message} (previous={previous!r}, last={last!r})")
        self.previous = previous
        self.last = last


class SolverError(DualEMError):
    """A linear solve failed or produced an unacceptable residual."""

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f"{message} (residual={residual:.3e})"
        super().__init__(message)
        self.residual = residual


class ValidationError(DualEMError, ValueError):
    """A model failed its structural checks before solving."""


@dataclass(frozen=True)
class CoilPairGeometry:
    """Excitation/pickup spiral pair, each idealised as a uniformly wound
    annulus of rectangular cross-section.

    Heights are measured from the sensor's trace plane; a plate lift-off is
    added on top of them when a sample is present. ``w`` is the centre-to-centre
    spacing of the two coils.
    """

    r_e1: float = 2.5e-3
    r_e2: float = 18e-3
    r_p1: float = 2.5e-3
    r_p2: float = 18e-3
    l_e1: float = 0.0
    l_e2: float = 35e-6
    l_p1: float = 0.0
    l_p2: float = 35e-6
    n1: int = 4
    n2: int = 4
    w: float = 41e-3

    def swapped(self) -> "CoilPairGeometry":
        """Exchange the roles of excitation and pickup coil."""
        return CoilPairGeometry(
            r_e1=self.r_p1, r_e2=self.r_p2, r_p1=self.r_e1, r_p2=self.r_e2,
            l_e1=self.l_p1, l_e2=self.l_p2, l_p1=self.l_e1, l_p2=self.l_e2,
            n1=self.n2, n2=self.n1, w=self.w,
        )

    def raised(self, dz: float) -> "CoilPairGeometry":
        return replace(
            self,
            l_e1=self.l_e1 + dz, l_e2=self.l_e2 + dz,
            l_p1=self.l_p1 + dz, l_p2=self.l_p2 + dz,
        )

    @property
    def nearest_gap(self) -> float:
        return self.w - self.r_e2 - self.r_p2


DEFAULT_GEOMETRY = CoilPairGeometry()


@dataclass(frozen=True)
class PlateSample:
    sigma: float = 0.0
    mu_r: float = 1.0
    c: float = 1e-3
    liftoff: float = 1.6e-3

    def __post_init__(self):
        if not (self.sigma >= 0):
            raise DomainError(f"conductivity must be >= 0, got {self.sigma}")
        if not (self.mu_r > 0):
            raise DomainError(f"relative permeability must be > 0, got {self.mu_r}")
        if not (self.c > 0):
            raise DomainError(f"plate thickness must be > 0, got {self.c}")
        if not (self.liftoff >= 0):
            raise DomainError(f"lift-off must be >= 0, got {self.liftoff}")

    @property
    def is_air(self) -> bool:
        return self.sigma == 0 and self.mu_r == 1


@dataclass(frozen=True)
class Excitation:
    """Sinusoidal drive. Exactly one of ``current`` / ``source_voltage`` is set."""

    frequency: float
    current: complex | None = None
    source_voltage: complex | None = None

    def __post_init__(self):
        if not (self.frequency >= 0) or not math.isfinite(self.frequency):
            raise DomainError(f"frequency must be finite and >= 0, got {self.frequency}")
        if (self.current is None) == (self.source_voltage is None):
            raise DomainError("exactly one of current / source_voltage must drive the solve")

    @property
    def omega(self) -> float:
        return 2 * math.pi * self.frequency


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_invalid(self):
        if self.violations:
            raise GeometryError("; ".join(self.violations))


def validate_geometry(g: CoilPairGeometry) -> ValidationReport:
    """List every violated invariant of ``g`` (empty report when valid)."""
    report = ValidationReport()
    values = [g.r_e1, g.r_e2, g.r_p1, g.r_p2, g.l_e1, g.l_e2, g.l_p1, g.l_p2, g.w]
    if not all(np.isfinite(values)):
        report.violations.append("non-finite dimension")
        return report
    for coil, r1, r2, l1, l2 in (
        ("excitation", g.r_e1, g.r_e2, g.l_e1, g.l_e2),
        ("pickup", g.r_p1, g.r_p2, g.l_p1, g.l_p2),
    ):
        if r1 < 0:
            report.violations.append(f"{coil}: negative inner radius")
        if r1 >= r2:
            report.violations.append(f"{coil}: degenerate radial extent")
        if l1 >= l2:
            report.violations.append(f"{coil}: degenerate axial extent")
    for name, n in (("n1", g.n1), ("n2", g.n2)):
        if int(n) != n or n < 1:
            report.violations.append(f"{name}: turn count must be an integer >= 1")
    if g.w < 0:
        report.violations.append("negative centre spacing")
    return report
