"""2-D electrostatics of the sensor cross-section.

The section runs through both coil centres. Each spiral is cut into six
trace segments (three either side of its own centre), giving T_A..T_F for
the transmitter and D_A..D_F for the receiver, lettered outward from the
sensor midline. Traces are zero-thickness strips in the plane y = 0; the
FR-4 substrate fills 0 <= y <= substrate_thickness and samples stack upward
from the lift-off plane.

Discretisation is a node-based finite-volume scheme on a uniform square grid:
potentials live on nodes, permittivity on cells (area-weighted where a
material boundary cuts a cell), and the outer boundary carries zero normal
flux. Conductor charge is the net discrete flux leaving the conductor's
nodes, so the Gauss contour is the dual-cell boundary around each conductor.
"""

from __future__ import annotations

import csv
import functools
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (
    DEFAULT_GEOMETRY,
    EPS_0,
    CoilPairGeometry,
    DomainError,
    SolverError,
    ValidationError,
)

SEGMENT_LETTERS = "ABCDEF"
_RESIDUAL_TOL = 1e-9
_ASYMMETRY_LIMIT = 0.02


@dataclass(frozen=True)
class Trace:
    name: str
    x0: float
    x1: float
    y: float = 0.0


@dataclass(frozen=True)
class SampleLayer:
    """One slab of the sample stack.

    ``width=None`` spans the whole domain. A ``floating`` layer is an
    equipotential conductor carrying zero net charge; a ``grounded`` layer is
    a conductor held at 0 V.
    """

    eps_r: float = 1.0
    thickness: float = 1e-3
    width: float | None = None
    floating: bool = False
    grounded: bool = False
    x_center: float = 0.0

    @property
    def is_conductor(self) -> bool:
        return self.floating or self.grounded


@dataclass(frozen=True)
class Inclusion:
    """Rectangular dielectric body placed after the layers are painted."""

    x0: float
    x1: float
    y0: float
    y1: float
    eps_r: float


def default_extrusion_length(g: CoilPairGeometry = DEFAULT_GEOMETRY, traces_per_side: int = 3) -> float:
    """Total spiral length shared among the section's segments of one coil."""
    mean_radius = 0.5 * (g.r_e1 + g.r_e2)
    return g.n1 * 2 * math.pi * mean_radius / (2 * traces_per_side)


@dataclass(frozen=True)
class CrossSectionModel:
    traces: tuple[Trace, ...]
    transmitter: tuple[str, ...]
    receiver: tuple[str, ...]
    cell: float = 0.25e-3
    half_width: float = 60e-3
    y_min: float = -30e-3
    y_max: float = 30e-3
    substrate_thickness: float = 1.6e-3
    substrate_eps_r: float = 4.4
    liftoff: float = 1.6e-3
    sample_layers: tuple[SampleLayer, ...] = ()
    inclusions: tuple[Inclusion, ...] = ()
    extrusion_length: float = field(default_factory=default_extrusion_length)

    @property
    def segment_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.traces)

    def layer_bounds(self) -> list[tuple[float, float]]:
        bounds, y = [], self.liftoff
        for layer in self.sample_layers:
            bounds.append((y, y + layer.thickness))
            y += layer.thickness
        return bounds

    def with_layers(self, layers: Iterable[SampleLayer], **changes) -> "CrossSectionModel":
        return replace(self, sample_layers=tuple(layers), **changes)

    def mirrored(self) -> "CrossSectionModel":
        """Same model reflected about x = 0."""
        traces = tuple(Trace(t.name, -t.x1, -t.x0, t.y) for t in self.traces)
        layers = tuple(replace(l, x_center=-l.x_center) for l in self.sample_layers)
        incl = tuple(Inclusion(-i.x1, -i.x0, i.y0, i.y1, i.eps_r) for i in self.inclusions)
        return replace(self, traces=traces, sample_layers=layers, inclusions=incl)


def coil_traces(g: CoilPairGeometry = DEFAULT_GEOMETRY, track_width: float = 4e-3,
                track_gap: float = 1e-3, traces_per_side: int = 3) -> tuple[Trace, ...]:
    """Section traces of the spiral pair, transmitter on the negative-x side.

    Each coil's outermost turn sits at its outer radius; turns step inward by
    one track pitch. Segments are lettered by distance from the midline.
    """
    pitch = track_width + track_gap
    traces = []
    for prefix, centre, r_out in (("T", -0.5 * g.w, g.r_e2), ("D", 0.5 * g.w, g.r_p2)):
        inward = +1.0 if centre < 0 else -1.0  # direction pointing to the midline
        edges = []
        for k in range(traces_per_side):
            r_hi = r_out - k * pitch
            r_lo = r_hi - track_width
            if r_lo < 0:
                raise ValidationError("tracks do not fit inside the coil radius")
            # side nearest the midline, then the far side
            edges.append((centre + inward * r_lo, centre + inward * r_hi))
            edges.append((centre - inward * r_hi, centre - inward * r_lo))
        edges.sort(key=lambda e: min(abs(e[0]), abs(e[1])))
        for letter, (a, b) in zip(SEGMENT_LETTERS, edges):
            traces.append(Trace(f"{prefix}_{letter}", min(a, b), max(a, b)))
    return tuple(traces)


def default_cross_section(g: CoilPairGeometry = DEFAULT_GEOMETRY, *, track_width: float = 4e-3,
                          track_gap: float = 1e-3, traces_per_side: int = 3, **kwargs) -> CrossSectionModel:
    traces = coil_traces(g, track_width, track_gap, traces_per_side)
    kwargs.setdefault("extrusion_length", default_extrusion_length(g, traces_per_side))
    return CrossSectionModel(
        traces=traces,
        transmitter=tuple(t.name for t in traces if t.name.startswith("T_")),
        receiver=tuple(t.name for t in traces if t.name.startswith("D_")),
        **kwargs,
    )


@dataclass(frozen=True)
class PotentialAssignment:
    potentials: Mapping[str, float]
    floating: frozenset = frozenset()

    @classmethod
    def ramp(cls, model: CrossSectionModel, receiver_scale: float | None = None,
             high: float = 1.0, low: float = 0.0) -> "PotentialAssignment":
        """Transmitter potentials falling linearly from ``high`` (T_A) to ``low``.

        The receiver is held uniformly at 0 V, or at ``receiver_scale`` times
        the matching transmitter potential when inductively coupled.
        """
        n = len(model.transmitter)
        values = {name: high + (low - high) * k / max(n - 1, 1) for k, name in enumerate(model.transmitter)}
        for tx, rx in zip(model.transmitter, model.receiver):
            values[rx] = 0.0 if receiver_scale is None else receiver_scale * values[tx]
        return cls(values)

    @classmethod
    def plates(cls, model: CrossSectionModel, transmitter: float = 1.0, receiver: float = 0.0):
        values = {name: transmitter for name in model.transmitter}
        values.update({name: receiver for name in model.receiver})
        return cls(values)


@dataclass(frozen=True)
class FieldMap:
    """Solved potential on nodes plus cell-centred field and permittivity."""

    x: np.ndarray
    y: np.ndarray
    potential: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    eps_r: np.ndarray
    charges: Mapping[str, float]
    conductor_potentials: Mapping[str, float]
    sensitivity: np.ndarray | None = None

    @property
    def cell(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def xc(self) -> np.ndarray:
        return 0.5 * (self.x[1:] + self.x[:-1])

    @property
    def yc(self) -> np.ndarray:
        return 0.5 * (self.y[1:] + self.y[:-1])

    def field_energy(self) -> float:
        """Stored energy per unit length, J/m."""
        h = self.cell
        return 0.5 * EPS_0 * float(np.sum(self.eps_r * (self.ex**2 + self.ey**2))) * h * h

    def column_profile(self) -> tuple[np.ndarray, np.ndarray]:
        if self.sensitivity is None:
            raise ValueError("field map carries no sensitivity")
        return self.xc, self.sensitivity.sum(axis=0)


@dataclass(frozen=True)
class CapacitanceMatrix:
    """Maxwell capacitance matrix in farads (diagonal positive, couplings negative)."""

    names: tuple[str, ...]
    maxwell: np.ndarray
    raw_asymmetry: float
    model: CrossSectionModel
    warnings: tuple[str, ...] = ()

    def index(self, name: str) -> int:
        return self.names.index(name)

    def coupling(self, a: str, b: str) -> float:
        """Induced charge magnitude per volt between two segments (F)."""
        return -float(self.maxwell[self.index(a), self.index(b)])

    def coupling_to(self, a: str, group: Sequence[str]) -> float:
        return sum(self.coupling(a, b) for b in group)

    def receiver_couplings(self) -> dict[str, float]:
        """Coupling of the whole transmitter to each receiver segment."""
        return {rx: sum(self.coupling(tx, rx) for tx in self.model.transmitter) for rx in self.model.receiver}

    def largest_pair(self) -> tuple[str, str]:
        best, pair = -math.inf, ("", "")
        for a in self.model.transmitter:
            for b in self.model.receiver:
                if self.coupling(a, b) > best:
                    best, pair = self.coupling(a, b), (a, b)
        return pair


# -- discretisation ---------------------------------------------------------


@dataclass(frozen=True)
class _Mesh:
    x: np.ndarray
    y: np.ndarray
    eps: np.ndarray
    stiffness: sp.csr_matrix
    conductors: dict
    floating_layers: tuple
    grounded_nodes: np.ndarray


def _grid_count(span: float, h: float, what: str) -> int:
    n = span / h
    if abs(n - round(n)) > 1e-6 or round(n) < 1:
        raise ValidationError(f"{what} ({span}) is not a whole number of cells ({h})")
    return int(round(n))


def _cover(lo, hi, centres, h):
    """Fraction of each cell (centred at ``centres``) inside [lo, hi]."""
    left = np.maximum(lo, centres - 0.5 * h)
    right = np.minimum(hi, centres + 0.5 * h)
    return np.clip(right - left, 0.0, h) / h


def _paint(eps, xc, yc, h, x0, x1, y0, y1, value):
    frac = _cover(y0, y1, yc, h)[:, None] * _cover(x0, x1, xc, h)[None, :]
    eps *= 1.0 - frac
    eps += value * frac


def _stiffness(eps: np.ndarray) -> sp.csr_matrix:
    """Five-point finite-volume operator; each edge weighted by its two cells."""
    ny, nx = eps.shape[0] + 1, eps.shape[1] + 1
    padded = np.zeros((ny + 1, nx + 1))
    padded[1:-1, 1:-1] = eps
    horiz = 0.5 * (padded[:-1, 1:-1] + padded[1:, 1:-1])
    vert = 0.5 * (padded[1:-1, :-1] + padded[1:-1, 1:])
    idx = np.arange(nx * ny).reshape(ny, nx)
    rows, cols, vals = [], [], []
    for a, b, wgt in (
        (idx[:, :-1].ravel(), idx[:, 1:].ravel(), horiz.ravel()),
        (idx[:-1, :].ravel(), idx[1:, :].ravel(), vert.ravel()),
    ):
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [wgt, wgt, -wgt, -wgt]
    n = nx * ny
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def _nodes_in(x, y, x0, x1, y0, y1, tol):
    ix = np.where((x >= x0 - tol) & (x <= x1 + tol))[0]
    iy = np.where((y >= y0 - tol) & (y <= y1 + tol))[0]
    return (iy[:, None] * x.size + ix[None, :]).ravel()


def validate_model(m: CrossSectionModel) -> None:
    h = m.cell
    if not (h > 0):
        raise ValidationError("cell size must be > 0")
    _grid_count(2 * m.half_width, h, "domain width")
    _grid_count(m.y_max - m.y_min, h, "domain height")
    _grid_count(-m.y_min, h, "trace plane offset")
    if m.substrate_eps_r < 1 or any(l.eps_r < 1 for l in m.sample_layers) or any(i.eps_r < 1 for i in m.inclusions):
        raise ValidationError("relative permittivity must be >= 1 everywhere")
    if m.extrusion_length <= 0:
        raise ValidationError("extrusion length must be > 0")
    names = m.segment_names
    if len(set(names)) != len(names):
        raise ValidationError("duplicate segment names")
    if not (set(m.transmitter) | set(m.receiver)) <= set(names):
        raise ValidationError("transmitter/receiver name unknown segments")
    for t in m.traces:
        if not (-m.half_width <= t.x0 < t.x1 <= m.half_width) or not (m.y_min < t.y < m.y_max):
            raise ValidationError(f"trace {t.name} lies outside the domain")
    rows: dict[float, list[Trace]] = {}
    for t in m.traces:
        rows.setdefault(t.y, []).append(t)
    for row in rows.values():
        row.sort(key=lambda t: t.x0)
        for a, b in zip(row, row[1:]):
            gap = b.x0 - a.x1
            if gap <= 0:
                raise ValidationError(f"traces {a.name} and {b.name} overlap")
            if gap < 4 * h - 1e-12:
                raise ValidationError(
                    f"grid under-resolved: gap {a.name}-{b.name} of {gap:.3g} m spans fewer than 4 cells"
                )
    if m.sample_layers and m.liftoff < m.substrate_thickness - 1e-12:
        raise ValidationError("sample stack starts inside the substrate")
    for (y0, y1), layer in zip(m.layer_bounds(), m.sample_layers):
        if layer.thickness <= 0:
            raise ValidationError("layer thickness must be > 0")
        if y1 > m.y_max:
            raise ValidationError("sample stack extends beyond the domain")
        if layer.floating and layer.grounded:
            raise ValidationError("a layer cannot be both floating and grounded")


@functools.lru_cache(maxsize=8)
def _mesh(m: CrossSectionModel) -> _Mesh:
    validate_model(m)
    h = m.cell
    nx = _grid_count(2 * m.half_width, h, "domain width") + 1
    ny = _grid_count(m.y_max - m.y_min, h, "domain height") + 1
    x = np.linspace(-m.half_width, m.half_width, nx)
    y = np.linspace(m.y_min, m.y_max, ny)
    xc, yc = 0.5 * (x[1:] + x[:-1]), 0.5 * (y[1:] + y[:-1])
    eps = np.ones((ny - 1, nx - 1))
    _paint(eps, xc, yc, h, -m.half_width, m.half_width, 0.0, m.substrate_thickness, m.substrate_eps_r)
    tol = 1e-6 * h
    floating, grounded = [], []
    for (y0, y1), layer in zip(m.layer_bounds(), m.sample_layers):
        if layer.width is None:
            x0, x1 = -m.half_width, m.half_width
        else:
            x0, x1 = layer.x_center - 0.5 * layer.width, layer.x_center + 0.5 * layer.width
        _paint(eps, xc, yc, h, x0, x1, y0, y1, layer.eps_r)
        if layer.is_conductor:
            nodes = _nodes_in(x, y, x0, x1, y0, y1, tol)
            if nodes.size == 0:
                raise ValidationError("conducting layer is thinner than the grid can resolve")
            (floating if layer.floating else grounded).append(nodes)
    for inc in m.inclusions:
        _paint(eps, xc, yc, h, inc.x0, inc.x1, inc.y0, inc.y1, inc.eps_r)
    conductors = {}
    for t in m.traces:
        nodes = _nodes_in(x, y, t.x0, t.x1, t.y, t.y, tol)
        if nodes.size == 0:
            raise ValidationError(f"trace {t.name} falls between grid nodes")
        conductors[t.name] = nodes
    grounded_nodes = np.concatenate(grounded) if grounded else np.empty(0, dtype=int)
    return _Mesh(x, y, eps, _stiffness(eps), conductors, tuple(floating), grounded_nodes)


class _Partition:
    """Factorised system for a fixed set of Dirichlet groups and floating groups."""

    def __init__(self, stiffness, fixed_groups, floating_groups):
        n = stiffness.shape[0]
        if not fixed_groups:
            # zero-flux walls everywhere: potential defined only up to a constant
            raise SolverError("singular electrostatic system: no conductor has a fixed potential")
        unknown = np.full(n, -1, dtype=np.int64)
        fixed_mask = np.zeros(n, dtype=bool)
        for nodes in fixed_groups:
            fixed_mask[nodes] = True
        float_mask = np.zeros(n, dtype=bool)
        for nodes in floating_groups:
            float_mask[nodes] = True
        free = np.where(~fixed_mask & ~float_mask)[0]
        unknown[free] = np.arange(free.size)
        for g, nodes in enumerate(floating_groups):
            unknown[nodes] = free.size + g
        self.n_unknown = free.size + len(floating_groups)
        live = np.where(unknown >= 0)[0]
        self.P = sp.csr_matrix((np.ones(live.size), (live, unknown[live])), shape=(n, self.n_unknown))
        cols = [sp.csr_matrix((np.ones(g.size), (g, np.zeros(g.size, dtype=int))), shape=(n, 1)) for g in fixed_groups]
        self.D = sp.hstack(cols).tocsr() if cols else sp.csr_matrix((n, 0))
        self.K = stiffness
        self.A = (self.P.T @ stiffness @ self.P).tocsc()
        try:
            self.lu = spla.splu(self.A)
        except RuntimeError as exc:
            raise SolverError(f"singular electrostatic system: {exc}") from exc

    def solve(self, values: np.ndarray) -> np.ndarray:
        """Node potentials for Dirichlet group values (n_groups x n_rhs)."""
        values = np.atleast_2d(np.asarray(values, dtype=float))
        dirichlet = self.D @ values
        rhs = -(self.P.T @ (self.K @ dirichlet))
        u = self.lu.solve(rhs)
        if not np.all(np.isfinite(u)):
            raise SolverError("electrostatic solve produced non-finite values")
        resid = self.A @ u - rhs
        scale = max(float(np.abs(rhs).max()), 1e-300)
        worst = float(np.abs(resid).max()) / scale
        if worst > _RESIDUAL_TOL:
            raise SolverError("electrostatic solve did not converge", worst)
        return dirichlet + self.P @ u


@functools.lru_cache(maxsize=8)
def _partition(m: CrossSectionModel, fixed_key: tuple, floating_key: tuple) -> _Partition:
    mesh = _mesh(m)
    fixed = [np.concatenate([mesh.conductors[n] for n in grp]) for grp in fixed_key]
    if mesh.grounded_nodes.size:
        fixed.append(mesh.grounded_nodes)
    floating = [np.concatenate([mesh.conductors[n] for n in grp]) for grp in floating_key]
    floating += list(mesh.floating_layers)
    return _Partition(mesh.stiffness, fixed, floating)


def _pad_grounded(m, values):
    if _mesh(m).grounded_nodes.size:
        values = np.vstack([values, np.zeros((1, values.shape[1]))])
    return values


def _cell_field(phi: np.ndarray, h: float):
    ex = -0.5 * ((phi[:-1, 1:] - phi[:-1, :-1]) + (phi[1:, 1:] - phi[1:, :-1])) / h
    ey = -0.5 * ((phi[1:, :-1] - phi[:-1, :-1]) + (phi[1:, 1:] - phi[:-1, 1:])) / h
    return ex, ey


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def _field_map(m, mesh, phi_flat, sensitivity=None) -> FieldMap:
    ny, nx = mesh.y.size, mesh.x.size
    phi = phi_flat.reshape(ny, nx)
    ex, ey = _cell_field(phi, m.cell)
    q = mesh.stiffness @ phi_flat
    charges = {name: EPS_0 * float(q[nodes].sum()) for name, nodes in mesh.conductors.items()}
    pots = {name: float(phi_flat[nodes[0]]) for name, nodes in mesh.conductors.items()}
    return FieldMap(
        x=_frozen(mesh.x), y=_frozen(mesh.y), potential=_frozen(phi), ex=_frozen(ex), ey=_frozen(ey),
        eps_r=_frozen(mesh.eps), charges=charges, conductor_potentials=pots,
        sensitivity=None if sensitivity is None else _frozen(sensitivity),
    )


def solve_potential(m: CrossSectionModel, p: PotentialAssignment) -> FieldMap:
    """Solve div(eps grad phi) = 0 with the segment potentials of ``p``."""
    names = m.segment_names
    unknown = (set(p.potentials) | set(p.floating)) - set(names)
    if unknown:
        raise ValidationError(f"unknown segments in assignment: {sorted(unknown)}")
    missing = [n for n in names if n not in p.potentials and n not in p.floating]
    if missing:
        raise ValidationError(f"segments neither assigned nor floating: {missing}")
    fixed = tuple((n,) for n in names if n not in p.floating)
    floating = tuple((n,) for n in names if n in p.floating)
    part = _partition(m, fixed, floating)
    values = np.array([[p.potentials[g[0]]] for g in fixed], dtype=float)
    phi = part.solve(_pad_grounded(m, values))[:, 0]
    return _field_map(m, _mesh(m), phi)


def segment_capacitance_matrix(m: CrossSectionModel) -> CapacitanceMatrix:
    """Maxwell matrix from one unit-potential solve per segment."""
    names = m.segment_names
    mesh = _mesh(m)
    part = _partition(m, tuple((n,) for n in names), ())
    phi = part.solve(_pad_grounded(m, np.eye(len(names))))
    flux = mesh.stiffness @ phi
    per_length = np.array([[flux[mesh.conductors[b], a].sum() for a in range(len(names))] for b in names]) * EPS_0
    c_raw = per_length * m.extrusion_length
    scale = np.maximum(np.maximum(np.abs(c_raw), np.abs(c_raw.T)), 1e-12 * np.abs(c_raw).max())
    asym = float(np.max(np.abs(c_raw - c_raw.T) / scale))
    notes = ()
    if asym > _ASYMMETRY_LIMIT:
        notes = (f"raw capacitance asymmetry {asym:.2%} exceeds {_ASYMMETRY_LIMIT:.0%}",)
        warnings.warn(notes[0], RuntimeWarning, stacklevel=2)
    sym = _frozen(0.5 * (c_raw + c_raw.T))
    return CapacitanceMatrix(names, sym, asym, m, notes)


def aggregate_coupling(source: CrossSectionModel | CapacitanceMatrix) -> float:
    """Transmitter-to-receiver capacitance with each coil acting as one electrode.

    All transmitter segments are driven at 1 V and the receiver segments are
    solved together as a single 0 V conductor; the result is the charge
    collected on the receiver, in farads.
    """
    m = source.model if isinstance(source, CapacitanceMatrix) else source
    mesh = _mesh(m)
    part = _partition(m, (tuple(m.transmitter), tuple(m.receiver)), ())
    phi = part.solve(_pad_grounded(m, np.array([[1.0], [0.0]])))[:, 0]
    rx_nodes = np.concatenate([mesh.conductors[n] for n in m.receiver])
    q_rx = EPS_0 * float((mesh.stiffness @ phi)[rx_nodes].sum())
    return -q_rx * m.extrusion_length


def sensitivity_map(m: CrossSectionModel) -> FieldMap:
    """Per-cell permittivity sensitivity from the product of two drive fields.

    ``S = -E_tx . E_rx`` where E_tx is the field with the transmitter at 1 V
    and the receiver at 0 V, and E_rx the reverse. The minus sign makes cells
    where a permittivity increase raises the coupling positive. The map is
    scaled so its maximum is 1.
    """
    mesh = _mesh(m)
    part = _partition(m, (tuple(m.transmitter), tuple(m.receiver)), ())
    phi = part.solve(_pad_grounded(m, np.array([[1.0, 0.0], [0.0, 1.0]])))
    ny, nx = mesh.y.size, mesh.x.size
    ex_t, ey_t = _cell_field(phi[:, 0].reshape(ny, nx), m.cell)
    ex_r, ey_r = _cell_field(phi[:, 1].reshape(ny, nx), m.cell)
    s = -(ex_t * ex_r + ey_t * ey_r)
    peak = float(s.max())
    if peak <= 0:
        raise SolverError("sensitivity map has no positive cells")
    return _field_map(m, mesh, phi[:, 0], s / peak)


@dataclass(frozen=True)
class CapacitorCheck:
    numeric: float
    analytic: float
    cell: float

    @property
    def rel_error(self) -> float:
        return abs(self.numeric - self.analytic) / self.analytic


def analytic_capacitor_check(width: float, gap: float, eps_r: float = 1.0, cell: float | None = None) -> CapacitorCheck:
    """Guarded parallel-plate capacitor against ``eps0 * eps_r * width / gap``.

    The 0 V plate spans the whole domain; the 1 V plate is a sensing electrode
    of ``width`` flanked by guard electrodes at the same potential that run
    out to the zero-flux side walls, so no fringing reaches the sensing
    electrode. Charge is collected on the sensing electrode only (F/m).
    """
    if width / gap < 10:
        raise DomainError("width/gap must be >= 10 for the ideal-capacitor comparison")
    h = cell if cell is not None else gap / 4
    nx = _grid_count(2 * width, h, "capacitor domain width") + 1
    ny = _grid_count(3 * gap, h, "capacitor domain height") + 1
    x = np.linspace(-width, width, nx)
    y = np.linspace(-gap, 2 * gap, ny)
    eps = np.full((ny - 1, nx - 1), float(eps_r))
    tol = 1e-6 * h
    bottom = _nodes_in(x, y, -width, width, 0.0, 0.0, tol)
    top = _nodes_in(x, y, -width, width, gap, gap, tol)
    sense = _nodes_in(x, y, -0.5 * width, 0.5 * width, gap, gap, tol)
    K = _stiffness(eps)
    part = _Partition(K, [bottom, top], [])
    phi = part.solve(np.array([[0.0], [1.0]]))[:, 0]
    # same dual-cell charge attribution as the trace segments, so the strip
    # counts as width + one cell
    numeric = EPS_0 * float((K @ phi)[sense].sum())
    return CapacitorCheck(numeric, EPS_0 * eps_r * width / gap, h)


# -- export -------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def _write_header(fh, header_lines):
    for line in header_lines or ():
        fh.write(f"# {line}\n")


def write_grid_csv(path, fmap: FieldMap, quantity: str = "potential", header_lines: Sequence[str] = ()):
    if quantity == "potential":
        xs, ys, values = fmap.x, fmap.y, fmap.potential
    else:
        xs, ys = fmap.xc, fmap.yc
        values = {
            "sensitivity": fmap.sensitivity,
            "ex": fmap.ex,
            "ey": fmap.ey,
            "e_magnitude": None if fmap.ex is None else np.hypot(fmap.ex, fmap.ey),
        }.get(quantity)
        if values is None:
            raise ValueError(f"unknown or missing quantity {quantity!r}")
    with open(path, "w", newline="") as fh:
        _write_header(fh, header_lines)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x_m", "y_m", quantity])
        for j, yv in enumerate(ys):
            for i, xv in enumerate(xs):
                writer.writerow([_fmt(xv), _fmt(yv), _fmt(values[j, i])])


def write_matrix_csv(path, cm: CapacitanceMatrix, header_lines: Sequence[str] = ()):
    with open(path, "w", newline="") as fh:
        _write_header(fh, header_lines)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["segment", *cm.names])
        for name, row in zip(cm.names, cm.maxwell):
            writer.writerow([name, *(_fmt(v) for v in row)])


def write_heatmap_svg(path, fmap: FieldMap, quantity: str = "potential"):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = fmap.potential if quantity == "potential" else getattr(fmap, quantity)
    fig, ax = plt.subplots(figsize=(8, 4))
    extent = [fmap.x[0] * 1e3, fmap.x[-1] * 1e3, fmap.y[0] * 1e3, fmap.y[-1] * 1e3]
    im = ax.imshow(data, origin="lower", extent=extent, aspect="auto", cmap="viridis")
    fig.colorbar(im, ax=ax, label=quantity)
    ax.set_xlabel("x (mm)")
    ax.set_ylabel("y (mm)")
    fig.savefig(path, format="svg")
    plt.close(fig)
