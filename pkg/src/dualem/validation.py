"""Independent cross-checks run by ``dualem validate``.

Each check computes a library result and an answer obtained another way
(power series, adaptive quadrature, filament summation, closed form) and
reports whether they agree within a fixed tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import circuit, electrostatic, inductive
from .core import COPPER_CONDUCTIVITY, DEFAULT_GEOMETRY, CoilPairGeometry, PlateSample


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def j1_series(x: float, terms: int = 60) -> float:
    """Maclaurin series of J1; cancellation limits it to |x| <= 10 or so."""
    total, term = 0.0, x / 2
    for k in range(terms):
        total += term
        term *= -(x / 2) ** 2 / ((k + 1) * (k + 2))
    return total


def _check_j1():
    xs = np.linspace(0.1, 10.0, 40)
    err = max(abs(float(inductive.bessel_j1(x)) - j1_series(x)) for x in xs)
    return err < 1e-12, f"max |J1 - series| = {err:.2e}"


def _check_kernel():
    worst = 0.0
    for x1, x2 in ((0.0, 1.0), (0.5, 7.0), (2.0, 25.0)):
        ref, _ = integrate.quad(lambda t: t * float(inductive.bessel_j1(t)), x1, x2, limit=200, epsabs=1e-14)
        worst = max(worst, abs(inductive.kernel_I(x1, x2) - ref) / abs(ref))
    return worst < 1e-9, f"max rel err vs quad = {worst:.2e}"


def _check_neumann():
    dd = inductive.mutual_inductance_free_space(DEFAULT_GEOMETRY).real
    nm = inductive.neumann_oracle(DEFAULT_GEOMETRY)
    rel = abs(dd - nm) / abs(nm)
    return rel < 0.05, f"integral {dd * 1e9:.4f} nH vs filaments {nm * 1e9:.4f} nH ({rel:.2%})"


def _check_coaxial():
    g = CoilPairGeometry(r_e1=10e-3, r_e2=10.1e-3, r_p1=10e-3, r_p2=10.1e-3,
                         l_e1=0.0, l_e2=0.1e-3, l_p1=5e-3, l_p2=5.1e-3, n1=1, n2=1, w=0.0)
    dd = inductive.mutual_inductance_free_space(g).real
    nm = inductive.neumann_oracle(g)
    rel = abs(dd - nm) / abs(nm)
    return rel < 1e-3, f"coaxial loops: {rel:.2e} relative"


def _check_reflection():
    alpha = np.logspace(0, 4, 50)
    air = np.max(np.abs(inductive.reflection_coefficient(alpha, 2 * math.pi * 1e5, PlateSample())))
    mag = inductive.reflection_coefficient(np.array([100.0]), 1.0, PlateSample(0.0, 50.0, 1.0))[0]
    skin = inductive.reflection_coefficient(np.array([1.0]), 2 * math.pi * 1e7,
                                            PlateSample(COPPER_CONDUCTIVITY, 1.0, 1e-2))[0]
    ok = air <= 1e-12 and abs(mag - 49 / 51) < 1e-6 and abs(skin + 1) < 1e-3
    return ok, f"air {air:.1e}, magnetic {abs(mag - 49 / 51):.1e}, skin {abs(skin + 1):.1e}"


def _check_signs():
    w = 2 * math.pi * 1e5
    cu = inductive.delta_L(DEFAULT_GEOMETRY, PlateSample(COPPER_CONDUCTIVITY, 1.0, 300e-6, 5e-3), w).real
    fe = inductive.delta_L(DEFAULT_GEOMETRY, PlateSample(0.0, 100.0, 1e-3, 5e-3), w).real
    return cu < 0 < fe, f"copper {cu:.3e} H, mu_r=100 {fe:.3e} H"


def _check_capacitor():
    chk = electrostatic.analytic_capacitor_check(20e-3, 1e-3)
    return chk.rel_error < 0.02, f"{chk.rel_error:.2e} relative"


def _check_matrix():
    m = electrostatic.default_cross_section()
    cm = electrostatic.segment_capacitance_matrix(m)
    fm = electrostatic.solve_potential(m, electrostatic.PotentialAssignment.plates(m))
    q_tx = sum(fm.charges[n] for n in m.transmitter)
    ratio = 2 * fm.field_energy() / q_tx
    ok = cm.raw_asymmetry < 0.02 and abs(ratio - 1) < 0.03
    return ok, f"asymmetry {cm.raw_asymmetry:.1e}, 2U/QV = {ratio:.4f}"


def _check_rc_divider():
    w, r, c = 2 * math.pi * 1e3, 1e3, 1e-7
    net = circuit.ACNetwork().voltage_source("V", "in", "0", 1.0).resistor("R", "in", "out", r)
    net.capacitor("C", "out", "0", c)
    got = circuit.mna_solve(net, w)["out"]
    zc = 1 / (1j * w * c)
    want = zc / (r + zc)
    rel = abs(got - want) / abs(want)
    return rel < 1e-10, f"{rel:.1e} relative"


def _check_round_trip():
    inst, w = circuit.InstrumentModel(), 2 * math.pi * 1e6
    c = 1.56e-12
    back = circuit.extract_cm(circuit.common_mode_forward(c, 1.0, inst, w), 1.0, inst, w)
    rel = abs(back - c) / c
    return rel < 1e-9, f"{rel:.1e} relative"


CHECKS: list[tuple[str, Callable]] = [
    ("J1 against power series", _check_j1),
    ("radial kernel against adaptive quadrature", _check_kernel),
    ("side-by-side mutual inductance against filament sum", _check_neumann),
    ("coaxial loops against filament sum", _check_coaxial),
    ("reflection coefficient limits", _check_reflection),
    ("plate-induced change signs", _check_signs),
    ("guarded parallel-plate capacitor", _check_capacitor),
    ("capacitance matrix symmetry and energy", _check_matrix),
    ("RC divider against closed form", _check_rc_divider),
    ("common-mode extraction round trip", _check_round_trip),
]


def run_checks() -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail))
    return results
