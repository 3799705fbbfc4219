"""Mutual inductance of an off-axis planar coil pair above a conductive plate.

The excitation coil is replaced by a uniform azimuthal current sheet filling
its rectangular cross-section. Its vector potential is expanded in first-order
Bessel modes over the spatial frequency ``alpha``; the plate enters through a
single reflection coefficient per mode. Flux through the pickup coil is then
collected by integrating the potential along each pickup loop (angle
``theta``) and across the pickup's radial extent.

Sign convention: the pickup loop is traversed with the angle
``phi = theta + atan2(r_p sin(theta), w - r_p cos(theta))`` between the
potential and the loop element, i.e. the two spirals are wound in opposite
senses. For the side-by-side sensor this makes the free-space coupling
positive, a conducting plate lowers it and a magnetic plate raises it.

``neumann_oracle`` is a brute-force double line integral that shares no code
with the Bessel-mode path and is used to cross-check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import j0, j1, struve

from .core import (
    MU_0,
    ConvergenceError,
    CoilPairGeometry,
    DomainError,
    Excitation,
    GeometryError,
    PlateSample,
    validate_geometry,
)

_PANEL = 16
_GL_PANEL = np.polynomial.legendre.leggauss(_PANEL)
_CHUNK = 64


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and tolerances for the (alpha, theta, r_p) triple integral.

    ``alpha_max=None`` selects ``40 / min(r_e2, r_p2)`` for the geometry being
    solved. Each accepted result has survived one doubling of every node count
    and a tail check over ``[alpha_max, 2 alpha_max]``.
    """

    alpha_max: float | None = None
    alpha_points: int = 256
    theta_points: int = 64
    rp_points: int = 32
    rel_tol: float = 1e-3
    max_refinements: int = 4

    def __post_init__(self):
        if self.alpha_max is not None and not (self.alpha_max > 0):
            raise DomainError(f"alpha_max must be > 0, got {self.alpha_max}")
        for name in ("alpha_points", "theta_points", "rp_points"):
            if getattr(self, name) < 8:
                raise DomainError(f"{name} must be >= 8")
        if not (0 < self.rel_tol <= 1e-2):
            raise DomainError(f"rel_tol must lie in (0, 1e-2], got {self.rel_tol}")

    def resolved(self, g: CoilPairGeometry) -> "QuadratureSpec":
        if self.alpha_max is not None:
            return self
        return replace(self, alpha_max=40.0 / min(g.r_e2, g.r_p2))

    def refined(self) -> "QuadratureSpec":
        return replace(
            self,
            alpha_points=2 * self.alpha_points,
            theta_points=2 * self.theta_points,
            rp_points=2 * self.rp_points,
        )


@dataclass(frozen=True)
class ComplexInductance:
    value: complex
    frequency: float = 0.0

    def __abs__(self):
        return abs(self.value)

    @property
    def real(self) -> float:
        return self.value.real

    @property
    def imag(self) -> float:
        return self.value.imag


@dataclass(frozen=True)
class CouplingSolution:
    """Free-space and plate parts of one coupling evaluated on a shared grid."""

    free_space: complex
    delta: complex
    frequency: float
    quadrature: QuadratureSpec

    @property
    def total(self) -> complex:
        return self.free_space + self.delta


def bessel_j1(x):
    """First-order Bessel function of the first kind."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("bessel_j1 requires finite input")
    out = j1(arr)
    return float(out) if out.ndim == 0 else out


def _kernel_antiderivative(x):
    # integral_0^x t J1(t) dt in closed form through Struve functions
    x = np.asarray(x, dtype=float)
    return 0.5 * math.pi * x * (j1(x) * struve(0, x) - j0(x) * struve(1, x))


def kernel_I(x1: float, x2: float) -> float:
    """Integral of ``t * J1(t)`` from ``x1`` to ``x2`` (``0 <= x1 <= x2``)."""
    if not (math.isfinite(x1) and math.isfinite(x2)):
        raise DomainError("kernel_I requires finite limits")
    if x1 < 0 or x1 > x2:
        raise DomainError(f"kernel_I requires 0 <= x1 <= x2, got ({x1}, {x2})")
    if x1 == x2:
        return 0.0
    return float(_kernel_antiderivative(x2) - _kernel_antiderivative(x1))


def reflection_coefficient(alpha, omega: float, plate: PlateSample):
    """Plate reflection factor R(alpha, omega) of a single homogeneous layer.

    Written with ``exp(-2 alpha_1 c)`` rather than ``exp(+2 alpha_1 c)`` so that
    thick or highly conducting plates do not overflow.
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(a <= 0):
        raise DomainError("alpha must be > 0")
    if omega < 0:
        raise DomainError("omega must be >= 0")
    mu = plate.mu_r
    k2 = omega * MU_0 * mu * plate.sigma
    if k2 == 0:
        a1 = a.astype(complex)
    else:
        a1 = np.sqrt(a * a + 1j * k2)
    plus = a1 + mu * a
    minus = a1 - mu * a
    decay = np.exp(-2.0 * a1 * plate.c)
    r = plus * minus * (decay - 1.0) / (plus * plus - minus * minus * decay)
    return complex(r) if r.ndim == 0 else r


def _alpha_rule(a0: float, a1: float, points: int, log_start: bool):
    n_panels = max(1, -(-points // _PANEL))
    if log_start and n_panels >= 4:
        n_log = n_panels // 4
        knee = a1 / (n_panels - n_log + 1)
        edges = np.concatenate(
            ([0.0], np.geomspace(knee * 1e-3, knee, n_log), np.linspace(knee, a1, n_panels - n_log + 1)[1:])
        )
    else:
        edges = np.linspace(a0, a1, n_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    x, w = _GL_PANEL
    nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def _gauss(a: float, b: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _phi(x):
    # x + exp(-x) - 1 for x >= 0, series below 1e-3 to avoid cancellation
    x = np.abs(x)
    series = x * x * (0.5 - x * (1.0 / 6.0 - x / 24.0))
    return np.where(x < 1e-3, series, x + np.expm1(-x))


def _z_free(alpha, g: CoilPairGeometry):
    # double integral of exp(-alpha |z - h|) over both coil heights
    def term(u):
        return _phi(alpha * u) / (alpha * alpha)

    return (
        term(g.l_p2 - g.l_e1) - term(g.l_p2 - g.l_e2)
        - term(g.l_p1 - g.l_e1) + term(g.l_p1 - g.l_e2)
    )


def _z_plate(alpha, g: CoilPairGeometry, liftoff: float):
    # double integral of exp(-alpha (z + h)) with both coils raised by lift-off
    def slab(l1, l2):
        return -np.exp(-alpha * (l1 + liftoff)) * np.expm1(-alpha * (l2 - l1)) / alpha

    return slab(g.l_e1, g.l_e2) * slab(g.l_p1, g.l_p2)


def _radial_angular(alpha, g: CoilPairGeometry, q: QuadratureSpec):
    """Excitation radial kernel times the pickup loop/annulus integral."""
    theta, wt = _gauss(0.0, math.pi, q.theta_points)
    rp, wr = _gauss(g.r_p1, g.r_p2, q.rp_points)
    th, rr = np.meshgrid(theta, rp, indexing="ij")
    sin_t, cos_t = np.sin(th), np.cos(th)
    along = g.w - rr * cos_t
    across = rr * sin_t
    dist = np.hypot(across, along)
    cos_phi = np.cos(th + np.arctan2(across, along))
    # factor 2: integrand is even in theta
    weights = (2.0 * wt[:, None] * wr[None, :] * cos_phi * rr).ravel()
    dist = dist.ravel()
    pickup = np.empty_like(alpha)
    for start in range(0, alpha.size, _CHUNK):
        block = alpha[start:start + _CHUNK]
        pickup[start:start + _CHUNK] = j1(block[:, None] * dist[None, :]) @ weights
    excitation = (_kernel_antiderivative(alpha * g.r_e2) - _kernel_antiderivative(alpha * g.r_e1)) / alpha**2
    return excitation * pickup


def _integrate(g, plate, omega, q, a0, a1, log_start):
    alpha, weights = _alpha_rule(a0, a1, q.alpha_points, log_start)
    core = _radial_angular(alpha, g, q) * weights
    free = float(np.sum(core * _z_free(alpha, g)))
    if plate is None or plate.is_air:
        delta = 0j
    else:
        refl = reflection_coefficient(alpha, omega, plate)
        delta = complex(np.sum(core * refl * _z_plate(alpha, g, plate.liftoff)))
    scale = MU_0 * g.n1 * g.n2 / (
        2.0 * (g.r_e2 - g.r_e1) * (g.l_e2 - g.l_e1) * (g.r_p2 - g.r_p1) * (g.l_p2 - g.l_p1)
    )
    return np.array([scale * free, scale * delta], dtype=complex)


def _attempt(g, plate, omega, q):
    body = _integrate(g, plate, omega, q, 0.0, q.alpha_max, True)
    tail = _integrate(g, plate, omega, q, q.alpha_max, 2 * q.alpha_max, False)
    return body, tail


def solve_coupling(g: CoilPairGeometry, plate: PlateSample | None = None,
                   omega: float = 0.0, q: QuadratureSpec | None = None) -> CouplingSolution:
    """Free-space coupling and plate contribution on one shared quadrature grid.

    The plate contribution is integrated directly (not as a difference of two
    totals), so a non-conducting, non-magnetic plate yields exactly zero.
    """
    validate_geometry(g).raise_if_invalid()
    q = (q or QuadratureSpec()).resolved(g)
    if plate is not None and omega < 0:
        raise DomainError("omega must be >= 0")
    body, tail = _attempt(g, plate, omega, q)
    coarse = fine = body + tail
    for _ in range(q.max_refinements):
        fine_q = q.refined()
        body, tail = _attempt(g, plate, omega, fine_q)
        fine = body + tail
        scale = max(abs(fine[0]), abs(fine[1]), 1e-300)
        step_ok = np.max(np.abs(fine - coarse)) <= q.rel_tol * scale
        tail_ok = np.max(np.abs(tail)) <= q.rel_tol * scale
        if step_ok and tail_ok:
            return CouplingSolution(fine[0], fine[1], omega / (2 * math.pi), fine_q)
        if tail_ok:
            q, coarse = fine_q, fine
        else:
            q = replace(q, alpha_max=2 * q.alpha_max, alpha_points=2 * q.alpha_points)
            body, tail = _attempt(g, plate, omega, q)
            coarse = body + tail
    raise ConvergenceError("Dodd-Deeds quadrature did not converge", coarse, fine)


def mutual_inductance_free_space(g: CoilPairGeometry, q: QuadratureSpec | None = None) -> ComplexInductance:
    sol = solve_coupling(g, None, 0.0, q)
    return ComplexInductance(complex(sol.free_space.real, 0.0), 0.0)


def _check_ac(omega):
    if not (omega > 0):
        raise DomainError(f"omega must be > 0 for a plate solve, got {omega}")


def mutual_inductance_above_plate(g: CoilPairGeometry, plate: PlateSample, omega: float,
                                  q: QuadratureSpec | None = None) -> ComplexInductance:
    _check_ac(omega)
    sol = solve_coupling(g, plate, omega, q)
    return ComplexInductance(complex(sol.total), omega / (2 * math.pi))


def delta_L(g: CoilPairGeometry, plate: PlateSample, omega: float,
            q: QuadratureSpec | None = None) -> ComplexInductance:
    """Change of mutual inductance caused by the plate."""
    _check_ac(omega)
    sol = solve_coupling(g, plate, omega, q)
    return ComplexInductance(complex(sol.delta), omega / (2 * math.pi))


def induced_voltage(L: ComplexInductance, exc: Excitation) -> complex:
    """Open-circuit pickup voltage ``j omega L I``."""
    if exc.current is None:
        raise DomainError("induced_voltage needs a current-driven excitation")
    if exc.frequency < 0:
        raise DomainError("frequency must be >= 0")
    if L.frequency not in (0.0, exc.frequency):
        raise DomainError(
            f"inductance evaluated at {L.frequency} Hz but excitation is at {exc.frequency} Hz"
        )
    return 1j * exc.omega * L.value * exc.current


def _filaments(r1, r2, l1, l2, count):
    edges = np.linspace(r1, r2, count + 1)
    return 0.5 * (edges[1:] + edges[:-1]), 0.5 * (l1 + l2)


def neumann_oracle(g: CoilPairGeometry, filaments_per_coil: int = 32,
                   segments_per_loop: int = 128, sense: int = -1) -> float:
    """Free-space mutual inductance by direct Neumann double line integration.

    Each coil becomes ``filaments_per_coil`` concentric circular filaments at
    the midpoints of equal radial slices (each carrying ``n / filaments`` of
    the ampere-turns) at mid-height. Every loop is sampled at
    ``segments_per_loop`` equally spaced angles, which integrates the periodic
    integrand spectrally.

    ``sense=-1`` winds the pickup opposite to the excitation (the convention of
    the Bessel-mode solver); ``sense=+1`` gives the textbook co-wound value.
    """
    if filaments_per_coil < 16 or segments_per_loop < 16:
        raise DomainError("filament and segment counts must be >= 16")
    if sense not in (-1, 1):
        raise DomainError("sense must be +1 or -1")
    validate_geometry(g).raise_if_invalid()

    t = 2 * math.pi * np.arange(segments_per_loop) / segments_per_loop
    dt = 2 * math.pi / segments_per_loop
    cos_t, sin_t = np.cos(t), np.sin(t)

    re, ze = _filaments(g.r_e1, g.r_e2, g.l_e1, g.l_e2, filaments_per_coil)
    rp, zp = _filaments(g.r_p1, g.r_p2, g.l_p1, g.l_p2, filaments_per_coil)
    # pickup points and tangents, flattened over (filament, angle)
    px = (g.w + rp[:, None] * cos_t).ravel()
    py = (rp[:, None] * sin_t).ravel()
    tx = (-rp[:, None] * sin_t * dt).ravel()
    ty = (rp[:, None] * cos_t * dt).ravel()
    dz = zp - ze

    total = 0.0
    for a in re:
        ex, ey = a * cos_t, a * sin_t
        dex, dey = -a * sin_t * dt, a * cos_t * dt
        dist = np.sqrt((ex[:, None] - px[None, :]) ** 2 + (ey[:, None] - py[None, :]) ** 2 + dz * dz)
        if dist.min() < 1e-9:
            raise GeometryError("overlapping filaments in Neumann integration")
        dot = dex[:, None] * tx[None, :] + dey[:, None] * ty[None, :]
        total += float(np.sum(dot / dist))
    weight = (g.n1 / filaments_per_coil) * (g.n2 / filaments_per_coil)
    return sense * MU_0 / (4 * math.pi) * weight * total
