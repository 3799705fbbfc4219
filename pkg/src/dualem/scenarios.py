"""Bench experiments composed from the three solvers.

Five sweeps are provided: plastic plates and water over the sensor face
(capacitive), a stack of copper foils (inductive), plastic slid between the
sensor and a floating copper plate, and water plus ferrite rings (both
channels at once). Each sweep point is independent, so points may run on a
thread pool; results always come back in sweep order.
"""

from __future__ import annotations

import csv
import functools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .circuit import (
    InstrumentModel,
    ModeReadout,
    SimultaneousParams,
    differential_voltage,
    simultaneous_readout,
    track_resistance,
)
from .core import (
    BENCH_MEASUREMENTS,
    COPPER_CONDUCTIVITY,
    DEFAULT_GEOMETRY,
    CoilPairGeometry,
    DomainError,
    Excitation,
    PlateSample,
    ValidationError,
)
from .electrostatic import (
    CrossSectionModel,
    Inclusion,
    SampleLayer,
    default_cross_section,
    default_extrusion_length,
    segment_capacitance_matrix,
)
from .inductive import QuadratureSpec, solve_coupling

KINDS = ("plastic_stack", "water_immersion", "copper_stack", "copper_plus_plastic", "water_plus_ferrite")
DIFFERENTIAL, COMMON = "differential", "common"
ABS_DELTA, SHIFTED = "abs_delta", "shifted"

_DEFAULT_SWEEPS = {
    "plastic_stack": (0, 1, 2, 3, 4),
    "water_immersion": (0, 10, 20, 30, 40, 50, 60),
    "copper_stack": (1, 2, 3, 4, 5),
    "copper_plus_plastic": (0, 1, 2, 3),
    "water_plus_ferrite": (0, 1, 2, 3),
}
_DEFAULT_FREQUENCY = {
    "plastic_stack": 1e6,
    "water_immersion": 1e6,
    "copper_stack": 100e3,
    "copper_plus_plastic": 1e6,
    "water_plus_ferrite": 1e6,
}


def normalize(v_sample: complex, v_air: complex, mode: str = ABS_DELTA) -> float:
    """Sample reading relative to the air reading, on phasor magnitudes."""
    if abs(v_air) == 0:
        raise DomainError("air reference voltage is zero")
    if mode == ABS_DELTA:
        return abs(v_sample - v_air) / abs(v_air)
    if mode == SHIFTED:
        return 1.0 + (abs(v_sample) - abs(v_air)) / abs(v_air)
    raise ValueError(f"unknown normalization {mode!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    """One experiment: sweep axis, drive, sample constants and solver settings.

    Water sweeps are in mL, every other sweep counts layers, plates or rings.
    ``frequency=None`` picks 100 kHz for the differential sweep and 1 MHz
    otherwise.
    """

    kind: str
    sweep: tuple = ()
    frequency: float | None = None
    geometry: CoilPairGeometry = DEFAULT_GEOMETRY
    instrument: InstrumentModel = InstrumentModel()
    quadrature: QuadratureSpec = QuadratureSpec()
    cell: float = 0.25e-3
    extrusion_length: float | None = None
    self_inductance: float = BENCH_MEASUREMENTS["self_inductance_H"]
    drive_current: float = 10e-3
    v_exc: float = 1.0
    liftoff: float = 1.6e-3
    eps_plastic: float = 3.0
    plastic_thickness: float = 1.5e-3
    plastic_width: float = 65e-3
    eps_water: float = 80.0
    water_mm_per_ml: float = 0.1e-3
    copper_sigma: float = COPPER_CONDUCTIVITY
    foil_thickness: float = 60e-6
    copper_liftoff: float = 5e-3
    plate_thickness: float = 300e-6
    plate_gap: float = 5e-3
    plate_width: float = 65e-3
    water_volume_ml: float = 15.0
    ferrite_mu_r: float = 600.0
    ferrite_eps_r: float = 12.0
    ferrite_layer_per_ring: float = 1e-3
    ferrite_ring_length: float = 10e-3
    ferrite_ring_x: tuple = (4e-3, 5e-3)
    ferrite_ring_height: float = 8e-3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown scenario {self.kind!r}; choose from {', '.join(KINDS)}")
        if not self.sweep:
            object.__setattr__(self, "sweep", _DEFAULT_SWEEPS[self.kind])
        object.__setattr__(self, "sweep", tuple(self.sweep))
        if any(v < 0 for v in self.sweep):
            raise ValidationError("sweep values must be >= 0")
        if self.frequency is not None and not self.frequency > 0:
            raise DomainError("frequency must be > 0")
        if self.kind == "copper_plus_plastic":
            if max(self.sweep) * self.plastic_thickness >= self.plate_gap:
                raise ValidationError("plastic stack does not fit below the copper plate")

    @property
    def f(self) -> float:
        return self.frequency if self.frequency is not None else _DEFAULT_FREQUENCY[self.kind]

    @property
    def omega(self) -> float:
        return 2 * math.pi * self.f

    @property
    def extrusion(self) -> float:
        if self.extrusion_length is not None:
            return self.extrusion_length
        return default_extrusion_length(self.geometry)

    def estimate_flags(self) -> tuple[str, ...]:
        flags = []
        if self.geometry == DEFAULT_GEOMETRY:
            flags.append("est:geometry")
        if self.kind != "copper_stack":
            if self.extrusion_length is None:
                flags.append("est:extrusion_length")
            if self.instrument == InstrumentModel():
                flags.append("est:zs")
        if self.kind == "water_plus_ferrite":
            flags.append("est:ferrite")
        return tuple(flags)

    def solver_settings(self) -> dict:
        q = self.quadrature
        return {
            "frequency_Hz": self.f,
            "cell_m": self.cell,
            "extrusion_m": self.extrusion,
            "alpha_points": q.alpha_points,
            "theta_points": q.theta_points,
            "rp_points": q.rp_points,
            "rel_tol": q.rel_tol,
        }


def spec_for(kind: str, **overrides) -> ScenarioSpec:
    return ScenarioSpec(kind=kind, **overrides)


@dataclass(frozen=True)
class ScenarioResult:
    """One sweep point. ``readouts`` maps channel name to its complex voltage."""

    sweep_value: object
    readouts: dict
    c_m: float | None
    normalized: dict
    normalization: str
    flags: tuple = ()
    metadata: dict = field(default_factory=dict)

    def v(self, mode: str) -> complex:
        return self.readouts[mode]


# -- shared pieces -----------------------------------------------------------


def _base_model(spec: ScenarioSpec) -> CrossSectionModel:
    return default_cross_section(spec.geometry, cell=spec.cell, liftoff=spec.liftoff,
                                 extrusion_length=spec.extrusion)


@functools.lru_cache(maxsize=32)
def _coupling(g: CoilPairGeometry, plate: PlateSample | None, omega: float, q: QuadratureSpec) -> complex:
    sol = solve_coupling(g, plate, omega, q)
    return complex(sol.total)


def _simultaneous(spec: ScenarioSpec, model: CrossSectionModel, m_value: complex) -> ModeReadout:
    cm = segment_capacitance_matrix(model)
    couplings = [cm.receiver_couplings()[n] for n in model.receiver]
    r = track_resistance(spec.extrusion)
    params = SimultaneousParams(spec.self_inductance, spec.self_inductance, m_value, couplings,
                                [r] * 5, spec.instrument, spec.v_exc)
    return simultaneous_readout(params, spec.omega)


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("DUALEM_THREADS", "1")))
    except ValueError:
        return 1


# -- layer builders ----------------------------------------------------------


def _plastic_layers(spec: ScenarioSpec, n: int) -> list[SampleLayer]:
    return [SampleLayer(spec.eps_plastic, spec.plastic_thickness, width=spec.plastic_width)] * int(n)


def _water_layers(spec: ScenarioSpec, volume_ml: float) -> list[SampleLayer]:
    height = volume_ml * spec.water_mm_per_ml
    return [SampleLayer(spec.eps_water, height)] if height > 0 else []


def _ferrite_inclusions(spec: ScenarioSpec, rings: int, water_height: float) -> tuple[Inclusion, ...]:
    """Ring walls either side of the midline, diluted by the fraction of the
    extrusion length the rings occupy."""
    if rings == 0:
        return ()
    frac = min(1.0, rings * spec.ferrite_ring_length / spec.extrusion)
    x0, x1 = spec.ferrite_ring_x
    y0, y_top = spec.liftoff, spec.liftoff + spec.ferrite_ring_height
    bands = []
    if water_height > 0:
        bands.append((y0, min(y0 + water_height, y_top), spec.eps_water))
    if y0 + water_height < y_top:
        bands.append((y0 + water_height, y_top, 1.0))
    out = []
    for lo, hi, background in bands:
        eps = frac * spec.ferrite_eps_r + (1 - frac) * background
        out.append(Inclusion(-x1, -x0, lo, hi, eps))
        out.append(Inclusion(x0, x1, lo, hi, eps))
    return tuple(out)


# -- scenarios ---------------------------------------------------------------


def _air_readout(spec: ScenarioSpec) -> ModeReadout:
    m_air = _coupling(spec.geometry, None, 0.0, spec.quadrature)
    return _simultaneous(spec, _base_model(spec), m_air)


def _common_sweep(spec: ScenarioSpec, layers_for, threads: int) -> list[ScenarioResult]:
    base = _base_model(spec)
    m_air = _coupling(spec.geometry, None, 0.0, spec.quadrature)

    def point(value):
        return _simultaneous(spec, base.with_layers(layers_for(value)), m_air)

    air = _air_readout(spec)
    readouts = _map(point, spec.sweep, threads)
    return [
        ScenarioResult(
            sweep_value=value,
            readouts={COMMON: r.v_common},
            c_m=r.c_m,
            normalized={COMMON: normalize(r.v_common, air.v_common, SHIFTED)},
            normalization=SHIFTED,
            flags=spec.estimate_flags(),
            metadata=spec.solver_settings(),
        )
        for value, r in zip(spec.sweep, readouts)
    ]


def run_plastic_stack(spec: ScenarioSpec | None = None, threads: int = 1) -> list[ScenarioResult]:
    spec = spec or spec_for("plastic_stack")
    return _common_sweep(spec, lambda n: _plastic_layers(spec, n), threads)


def run_water_immersion(spec: ScenarioSpec | None = None, threads: int = 1) -> list[ScenarioResult]:
    spec = spec or spec_for("water_immersion")
    return _common_sweep(spec, lambda v: _water_layers(spec, v), threads)


def run_copper_stack(spec: ScenarioSpec | None = None, threads: int = 1) -> list[ScenarioResult]:
    """Differential voltage ``j w M I`` over a stack of copper foils."""
    spec = spec or spec_for("copper_stack")
    exc = Excitation(spec.f, current=spec.drive_current)
    g, q, w = spec.geometry, spec.quadrature, spec.omega

    def point(n):
        plate = None
        if n > 0:
            plate = PlateSample(spec.copper_sigma, 1.0, n * spec.foil_thickness, spec.copper_liftoff)
        return differential_voltage(_coupling(g, plate, w, q), exc)

    v_air = point(0)
    volts = _map(point, spec.sweep, threads)
    return [
        ScenarioResult(
            sweep_value=n,
            readouts={DIFFERENTIAL: v},
            c_m=None,
            normalized={DIFFERENTIAL: normalize(v, v_air, ABS_DELTA)},
            normalization=ABS_DELTA,
            flags=spec.estimate_flags(),
            metadata=spec.solver_settings(),
        )
        for n, v in zip(spec.sweep, volts)
    ]


def _two_channel(spec, value, readout, air) -> ScenarioResult:
    return ScenarioResult(
        sweep_value=value,
        readouts={DIFFERENTIAL: readout.v_diff, COMMON: readout.v_common},
        c_m=readout.c_m,
        normalized={
            DIFFERENTIAL: normalize(readout.v_diff, air.v_diff, SHIFTED),
            COMMON: normalize(readout.v_common, air.v_common, SHIFTED),
        },
        normalization=SHIFTED,
        flags=spec.estimate_flags(),
        metadata=spec.solver_settings(),
    )


def run_copper_plus_plastic(spec: ScenarioSpec | None = None, threads: int = 1) -> list[ScenarioResult]:
    """Plastic plates slid under a floating copper plate held above the sensor face."""
    spec = spec or spec_for("copper_plus_plastic")
    base = _base_model(spec)
    plate_z = spec.liftoff + spec.plate_gap
    plate = PlateSample(spec.copper_sigma, 1.0, spec.plate_thickness, plate_z)
    m_plate = _coupling(spec.geometry, plate, spec.omega, spec.quadrature)
    copper = SampleLayer(1.0, spec.plate_thickness, width=spec.plate_width, floating=True)

    def point(n):
        layers = _plastic_layers(spec, n)
        layers.append(SampleLayer(1.0, spec.plate_gap - n * spec.plastic_thickness))
        layers.append(copper)
        return _simultaneous(spec, base.with_layers(layers), m_plate)

    air = _air_readout(spec)
    readouts = _map(point, spec.sweep, threads)
    return [_two_channel(spec, n, r, air) for n, r in zip(spec.sweep, readouts)]


def run_water_plus_ferrite(spec: ScenarioSpec | None = None, threads: int = 1) -> list[ScenarioResult]:
    """Air, then water, then water with 1..k ferrite rings.

    The first row is labelled ``air``; the remaining rows carry the ring
    count of the sweep (0 = water only).
    """
    spec = spec or spec_for("water_plus_ferrite")
    base = _base_model(spec)
    water = _water_layers(spec, spec.water_volume_ml)
    height = spec.water_volume_ml * spec.water_mm_per_ml

    def point(k):
        plate = None
        if k > 0:
            plate = PlateSample(0.0, spec.ferrite_mu_r, k * spec.ferrite_layer_per_ring, spec.liftoff)
        m_value = _coupling(spec.geometry, plate, spec.omega, spec.quadrature)
        model = base.with_layers(water, inclusions=_ferrite_inclusions(spec, int(k), height))
        return _simultaneous(spec, model, m_value)

    air = _air_readout(spec)
    readouts = _map(point, spec.sweep, threads)
    rows = [_two_channel(spec, "air", air, air)]
    rows += [_two_channel(spec, k, r, air) for k, r in zip(spec.sweep, readouts)]
    return rows


RUNNERS = {
    "plastic_stack": run_plastic_stack,
    "water_immersion": run_water_immersion,
    "copper_stack": run_copper_stack,
    "copper_plus_plastic": run_copper_plus_plastic,
    "water_plus_ferrite": run_water_plus_ferrite,
}


def run_scenario(spec: ScenarioSpec, threads: int = 1) -> list[ScenarioResult]:
    return RUNNERS[spec.kind](spec, threads)


# -- output ---------------------------------------------------------------------

CSV_COLUMNS = ("sweep_value", "mode", "re_V", "im_V", "C_m_F", "V_normalized", "flags")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".12g")


def scenario_rows(results: Sequence[ScenarioResult]) -> list[list[str]]:
    rows = []
    for res in results:
        for mode, v in res.readouts.items():
            c_m = res.c_m if mode == COMMON else None
            rows.append([
                _fmt(res.sweep_value), mode, _fmt(v.real), _fmt(v.imag), _fmt(c_m),
                _fmt(res.normalized[mode]), ";".join(res.flags),
            ])
    return rows


def write_scenario_csv(path, results: Sequence[ScenarioResult], header_lines: Sequence[str] = ()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(scenario_rows(results))


def plot_scenario(path, results: Sequence[ScenarioResult], title: str = ""):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    modes = list(results[0].readouts)
    fig, axes = plt.subplots(len(modes), 1, figsize=(6, 3 * len(modes)), squeeze=False)
    labels = [str(r.sweep_value) for r in results]
    for ax, mode in zip(axes[:, 0], modes):
        if mode == COMMON:
            ax.plot(labels, [r.c_m * 1e12 for r in results], "o-")
            ax.set_ylabel("C_m (pF)")
        else:
            ax.plot(labels, [r.normalized[mode] for r in results], "o-")
            ax.set_ylabel(f"V normalized ({results[0].normalization})")
        ax.set_title(f"{title} {mode}".strip())
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
