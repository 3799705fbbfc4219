"""AC phasor analysis of the sensor's equivalent circuits.

A small modified-nodal-analysis engine (dense complex, networks here have a
few dozen unknowns at most) plus the closed-form relations used to read the
inductive channel differentially and the capacitive channel in common mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core import COPPER_RESISTIVITY, DomainError, Excitation, SolverError, ValidationError

GROUND = "0"
_KCL_TOL = 1e-12


class TopologyError(SolverError):
    """The network has no unique solution; ``nodes`` lists the culprits."""

    def __init__(self, message, nodes=()):
        super().__init__(message)
        self.nodes = tuple(nodes)


class InversionError(DomainError):
    """A measured voltage cannot come from a passive capacitive divider."""


@dataclass(frozen=True)
class Resistor:
    name: str
    a: str
    b: str
    value: float


@dataclass(frozen=True)
class Capacitor:
    name: str
    a: str
    b: str
    value: float


@dataclass(frozen=True)
class Inductor:
    name: str
    a: str
    b: str
    value: float


@dataclass(frozen=True)
class MutualCoupling:
    """Mutual inductance between two named inductors, dotted at their ``a`` ends."""

    name: str
    l1: str
    l2: str
    value: complex


@dataclass(frozen=True)
class VoltageSource:
    """Ideal source holding ``V(a) - V(b) = value``."""

    name: str
    a: str
    b: str
    value: complex


@dataclass(frozen=True)
class CurrentSource:
    """Ideal source pushing ``value`` out of node ``a`` into node ``b``."""

    name: str
    a: str
    b: str
    value: complex


_TWO_TERMINAL = (Resistor, Capacitor, Inductor, VoltageSource, CurrentSource)


@dataclass
class ACNetwork:
    elements: list = field(default_factory=list)
    ground: str = GROUND

    def add(self, element) -> "ACNetwork":
        if any(e.name == element.name for e in self.elements):
            raise ValidationError(f"duplicate element name {element.name!r}")
        self.elements.append(element)
        return self

    def resistor(self, name, a, b, value):
        return self.add(Resistor(name, a, b, value))

    def capacitor(self, name, a, b, value):
        return self.add(Capacitor(name, a, b, value))

    def inductor(self, name, a, b, value):
        return self.add(Inductor(name, a, b, value))

    def mutual(self, name, l1, l2, value):
        return self.add(MutualCoupling(name, l1, l2, value))

    def voltage_source(self, name, a, b, value):
        return self.add(VoltageSource(name, a, b, value))

    def current_source(self, name, a, b, value):
        return self.add(CurrentSource(name, a, b, value))

    def element(self, name):
        for e in self.elements:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def nodes(self) -> tuple[str, ...]:
        seen = {}
        for e in self.elements:
            if isinstance(e, _TWO_TERMINAL):
                seen.setdefault(e.a, None)
                seen.setdefault(e.b, None)
        return tuple(seen)

    def validate(self) -> None:
        inductors = {e.name: e for e in self.elements if isinstance(e, Inductor)}
        for e in self.elements:
            if isinstance(e, (Resistor, Capacitor, Inductor)):
                if not (e.value > 0 and math.isfinite(e.value)):
                    raise ValidationError(f"{e.name}: value must be finite and > 0")
            if isinstance(e, _TWO_TERMINAL) and e.a == e.b:
                raise ValidationError(f"{e.name}: both terminals on node {e.a!r}")
            if isinstance(e, MutualCoupling):
                if e.l1 not in inductors or e.l2 not in inductors or e.l1 == e.l2:
                    raise ValidationError(f"{e.name}: must couple two distinct inductors")
                k = abs(e.value) / math.sqrt(inductors[e.l1].value * inductors[e.l2].value)
                if k > 1:
                    raise ValidationError(f"{e.name}: coupling coefficient {k:.4g} exceeds 1")
        if self.ground not in self.nodes:
            raise ValidationError(f"ground node {self.ground!r} is not connected")


@dataclass(frozen=True)
class MNASolution:
    voltages: Mapping[str, complex]
    currents: Mapping[str, complex]
    omega: float
    kcl_residual: float

    def __getitem__(self, node: str) -> complex:
        return self.voltages[node]

    def between(self, a: str, b: str) -> complex:
        return self.voltages[a] - self.voltages[b]


def _check_topology(net: ACNetwork) -> None:
    nodes = list(net.nodes)
    index = {n: i for i, n in enumerate(nodes)}
    pairs = [(index[e.a], index[e.b]) for e in net.elements
             if isinstance(e, _TWO_TERMINAL) and not isinstance(e, CurrentSource)]
    rows = [p[0] for p in pairs]
    cols = [p[1] for p in pairs]
    graph = coo_matrix((np.ones(len(pairs)), (rows, cols)), shape=(len(nodes), len(nodes)))
    _, labels = connected_components(graph, directed=False)
    grounded = labels[index[net.ground]]
    floating = [n for n in nodes if labels[index[n]] != grounded]
    if floating:
        raise TopologyError(f"floating subgraph with no path to ground: {', '.join(floating)}", floating)


def mna_solve(net: ACNetwork, omega: float) -> MNASolution:
    """Solve the network at angular frequency ``omega`` (rad/s)."""
    if not (omega > 0 and math.isfinite(omega)):
        raise DomainError(f"omega must be finite and > 0, got {omega}")
    net.validate()
    _check_topology(net)
    nodes = [n for n in net.nodes if n != net.ground]
    nidx = {n: i for i, n in enumerate(nodes)}
    branches = [e for e in net.elements if isinstance(e, (Inductor, VoltageSource))]
    bidx = {e.name: len(nodes) + k for k, e in enumerate(branches)}
    size = len(nodes) + len(branches)
    A = np.zeros((size, size), dtype=complex)
    b = np.zeros(size, dtype=complex)

    def node(n):
        return nidx.get(n)

    for e in net.elements:
        if isinstance(e, (Resistor, Capacitor)):
            y = 1.0 / e.value if isinstance(e, Resistor) else 1j * omega * e.value
            i, j = node(e.a), node(e.b)
            if i is not None:
                A[i, i] += y
            if j is not None:
                A[j, j] += y
            if i is not None and j is not None:
                A[i, j] -= y
                A[j, i] -= y
        elif isinstance(e, (Inductor, VoltageSource)):
            k = bidx[e.name]
            i, j = node(e.a), node(e.b)
            if i is not None:
                A[i, k] += 1
                A[k, i] += 1
            if j is not None:
                A[j, k] -= 1
                A[k, j] -= 1
            if isinstance(e, Inductor):
                A[k, k] -= 1j * omega * e.value
            else:
                b[k] = e.value
        elif isinstance(e, CurrentSource):
            i, j = node(e.a), node(e.b)
            if i is not None:
                b[i] -= e.value
            if j is not None:
                b[j] += e.value
        elif isinstance(e, MutualCoupling):
            k1, k2 = bidx[e.l1], bidx[e.l2]
            A[k1, k2] -= 1j * omega * e.value
            A[k2, k1] -= 1j * omega * e.value
    try:
        x = np.linalg.solve(A, b)
        x = x + np.linalg.solve(A, b - A @ x)  # one refinement step
    except np.linalg.LinAlgError as exc:
        raise TopologyError(f"singular network (source or inductor loop?): {exc}", nodes) from exc
    if not np.all(np.isfinite(x)):
        raise TopologyError("singular network produced non-finite voltages", nodes)

    volts = {net.ground: 0j}
    volts.update({n: complex(x[nidx[n]]) for n in nodes})
    currents = {}
    for e in net.elements:
        if isinstance(e, Resistor):
            currents[e.name] = (volts[e.a] - volts[e.b]) / e.value
        elif isinstance(e, Capacitor):
            currents[e.name] = 1j * omega * e.value * (volts[e.a] - volts[e.b])
        elif isinstance(e, (Inductor, VoltageSource)):
            currents[e.name] = complex(x[bidx[e.name]])
        elif isinstance(e, CurrentSource):
            currents[e.name] = complex(e.value)
    # KCL at every node (ground included), from the element currents
    balance = {n: 0j for n in volts}
    for e in net.elements:
        if isinstance(e, _TWO_TERMINAL):
            balance[e.a] -= currents[e.name]
            balance[e.b] += currents[e.name]
    # scale: branch currents, and the roundoff floor y*(|Va|+|Vb|) of each
    # admittance, which dominates when a huge load carries almost nothing
    largest = max((abs(c) for c in currents.values()), default=0.0)
    for e in net.elements:
        if isinstance(e, (Resistor, Capacitor)):
            y = 1.0 / e.value if isinstance(e, Resistor) else omega * e.value
            largest = max(largest, y * (abs(volts[e.a]) + abs(volts[e.b])))
    worst = max(abs(v) for v in balance.values())
    rel = worst / largest if largest > 0 else worst
    if rel > _KCL_TOL:
        raise SolverError("KCL residual above tolerance", rel)
    return MNASolution(volts, currents, omega, rel)


# -- instrument and mode relations ---------------------------------------------


@dataclass(frozen=True)
class InstrumentModel:
    """Analyser inputs: common-mode Zs (parallel R, C) and the two
    differential channel resistances."""

    zs_r: float = 1e6
    zs_c: float = 35e-12
    r1: float = 1e6
    r2: float = 1e6

    def __post_init__(self):
        for name in ("zs_r", "zs_c", "r1", "r2"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be finite and > 0, got {v}")

    def zs(self, omega: float) -> complex:
        return 1.0 / (1.0 / self.zs_r + 1j * omega * self.zs_c)


@dataclass(frozen=True)
class ModeReadout:
    v_diff: complex
    v_common: complex
    c_m: float

    def __post_init__(self):
        if not all(map(np.isfinite, (self.v_diff, self.v_common, self.c_m))):
            raise SolverError("non-finite mode readout")
        if self.c_m < 0:
            raise InversionError(f"negative extracted capacitance {self.c_m}")


def differential_voltage(delta_m, exc: Excitation) -> complex:
    """Inductive channel voltage ``j w dM I`` for a current-driven transmitter."""
    if exc.current is None:
        raise DomainError("differential_voltage needs a current-driven excitation")
    dm = getattr(delta_m, "value", delta_m)
    return 1j * exc.omega * complex(dm) * complex(exc.current)


def measured_capacitance(c_d: float, c_s1: float, c_3: float, c_s2: float) -> float:
    """Direct capacitance in parallel with the series chain through the sample."""
    values = (c_d, c_s1, c_3, c_s2)
    if any(not (v >= 0) for v in values):
        raise DomainError("capacitances must be >= 0")
    series = (c_s1, c_3, c_s2)
    if any(v == 0 for v in series):
        return float(c_d)
    return float(c_d + 1.0 / sum(1.0 / v for v in series))


def common_mode_current(couplings: Iterable[tuple[float, complex]], omega: float) -> complex:
    if not omega > 0:
        raise DomainError("omega must be > 0")
    return complex(sum(1j * omega * c * v for c, v in couplings))


def common_mode_voltage(i_c: complex, zs: InstrumentModel, omega: float) -> complex:
    if not omega > 0:
        raise DomainError("omega must be > 0")
    return complex(i_c) * zs.zs(omega)


def common_mode_forward(c_m: float, v_exc: complex, zs: InstrumentModel, omega: float) -> complex:
    """V_A of the series C_m / Zs divider driven by ``v_exc``."""
    if not omega > 0:
        raise DomainError("omega must be > 0")
    if c_m == 0:
        return 0j
    z = zs.zs(omega)
    return complex(v_exc) * z / (z + 1.0 / (1j * omega * c_m))


def extract_cm(v_a: complex, v_exc: complex, zs: InstrumentModel, omega: float) -> float:
    """Invert the common-mode divider for the coupling capacitance."""
    if not omega > 0:
        raise DomainError("omega must be > 0")
    if abs(v_a) >= abs(v_exc):
        raise InversionError(f"|v_a| = {abs(v_a):.4g} is not below |v_exc| = {abs(v_exc):.4g}")
    c = v_a / (1j * omega * zs.zs(omega) * (v_exc - v_a))
    if c.real < 0:
        raise InversionError(f"divider inversion gave negative capacitance {c.real:.4g}")
    return float(c.real)


# -- the simultaneous-mode sensor network ------------------------------------------

RECEIVER_NODES = ("D_A", "D_B", "D_C", "D_D", "D_E", "D_F")


def track_resistance(length: float, width: float = 4e-3, thickness: float = 35e-6,
                     resistivity: float = COPPER_RESISTIVITY) -> float:
    return resistivity * length / (width * thickness)


@dataclass(frozen=True)
class SimultaneousParams:
    """Inputs of the simultaneous-mode network.

    ``couplings`` are C_A..C_F (transmitter to each receiver tap), ``segment_r``
    the five receiver track resistances R_AB..R_EF. The receiver inductance is
    lumped between the last tap resistor and D_F.
    """

    l1: float
    l2: float
    m: complex
    couplings: Sequence[float]
    segment_r: Sequence[float]
    instrument: InstrumentModel = InstrumentModel()
    v_exc: complex = 1.0

    def __post_init__(self):
        if len(self.couplings) != 6 or len(self.segment_r) != 5:
            raise ValidationError("need six tap couplings and five segment resistances")


def build_simultaneous_network(p: SimultaneousParams, omega: float | None = None) -> ACNetwork:
    """Transmitter, distributed receiver and both analyser channels.

    The common-mode channel (Zs) taps D_A; the differential channel's inputs
    R1 and R2 load D_A and D_F to ground. ``omega`` is unused and accepted
    for symmetry with the solver.
    """
    net = ACNetwork()
    net.voltage_source("V_exc", "tx", GROUND, p.v_exc)
    net.inductor("L1", "tx", GROUND, p.l1)
    chain = list(RECEIVER_NODES[:-1]) + ["x_L2"]
    for k, r in enumerate(p.segment_r):
        net.resistor(f"R_{RECEIVER_NODES[k][-1]}{RECEIVER_NODES[k + 1][-1]}", chain[k], chain[k + 1], r)
    net.inductor("L2", "x_L2", "D_F", p.l2)
    if p.m != 0:
        net.mutual("M", "L1", "L2", p.m)
    for name, c in zip(RECEIVER_NODES, p.couplings):
        if c > 0:
            net.capacitor(f"C_{name[-1]}", "tx", name, c)
    inst = p.instrument
    net.resistor("Zs_R", "D_A", GROUND, inst.zs_r)
    net.capacitor("Zs_C", "D_A", GROUND, inst.zs_c)
    net.resistor("R1", "D_A", GROUND, inst.r1)
    net.resistor("R2", "D_F", GROUND, inst.r2)
    return net


def simultaneous_readout(p: SimultaneousParams, omega: float) -> ModeReadout:
    sol = mna_solve(build_simultaneous_network(p), omega)
    v_common = sol["D_A"]
    c_m = extract_cm(v_common, p.v_exc, p.instrument, omega) if v_common != 0 else 0.0
    return ModeReadout(sol.between("D_F", "D_A"), v_common, c_m)
