"""Simultaneous readout: one receiver, a differential and a common-mode channel.

Perturbing the capacitive couplings leaves the differential voltage alone,
and perturbing M leaves the common-mode voltage alone.

Run:  python demos/03_measurement_modes.py
"""

import math

from dualem.circuit import SimultaneousParams, simultaneous_readout, track_resistance
from dualem.core import DEFAULT_GEOMETRY
from dualem.electrostatic import default_cross_section, segment_capacitance_matrix
from dualem.inductive import mutual_inductance_free_space

model = default_cross_section()
cm = segment_capacitance_matrix(model)
taps = [cm.receiver_couplings()[n] for n in model.receiver]
m0 = mutual_inductance_free_space(DEFAULT_GEOMETRY).real
seg = [track_resistance(model.extrusion_length)] * 5
w = 2 * math.pi * 1e6


def readout(c_scale=1.0, m_scale=1.0):
    p = SimultaneousParams(320e-9, 320e-9, m_scale * m0, [c_scale * c for c in taps], seg)
    return simultaneous_readout(p, w)


base = readout()
print(f"1 MHz, 1 V drive: |v_diff| = {abs(base.v_diff) * 1e3:.4f} mV, "
      f"|v_common| = {abs(base.v_common) * 1e3:.3f} mV, C_m = {base.c_m * 1e12:.4f} pF")
print(f"sum of tap capacitances    = {sum(taps) * 1e12:.4f} pF")
print("\n        change            d|v_diff|    d|v_common|")
for label, kw in (("C x0.5", {"c_scale": 0.5}), ("C x1.5", {"c_scale": 1.5}),
                  ("M x0.5", {"m_scale": 0.5}), ("M x1.5", {"m_scale": 1.5})):
    r = readout(**kw)
    dd = abs(r.v_diff - base.v_diff) / abs(base.v_diff)
    dc = abs(r.v_common - base.v_common) / abs(base.v_common)
    print(f"  {label:<20} {dd:10.2e}  {dc:12.2e}")
