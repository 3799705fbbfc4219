"""Forward models of a dual-modality planar spiral sensor.

The package couples three solvers: a Dodd-Deeds integral for the mutual
inductance of a side-by-side coil pair over layered plates, a 2-D
finite-volume electrostatic solver for the segment capacitances, and a
phasor circuit engine that turns both into differential and common-mode
instrument readings.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BENCH_MEASUREMENTS,
    DEFAULT_GEOMETRY,
    CoilPairGeometry,
    ConvergenceError,
    DomainError,
    DualEMError,
    Excitation,
    GeometryError,
    PlateSample,
    SolverError,
    ValidationError,
    validate_geometry,
)

__all__ = [
    "BENCH_MEASUREMENTS",
    "DEFAULT_GEOMETRY",
    "CoilPairGeometry",
    "ConvergenceError",
    "DomainError",
    "DualEMError",
    "Excitation",
    "GeometryError",
    "PlateSample",
    "SolverError",
    "ValidationError",
    "validate_geometry",
    "__version__",
]
