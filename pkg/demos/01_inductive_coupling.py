"""Inductive channel: free-space coupling and what conducting or magnetic plates do to it.

Run:  python demos/01_inductive_coupling.py
"""

import math

from dualem.core import COPPER_CONDUCTIVITY, DEFAULT_GEOMETRY, Excitation, PlateSample
from dualem.inductive import delta_L, induced_voltage, mutual_inductance_free_space, neumann_oracle

g = DEFAULT_GEOMETRY
m0 = mutual_inductance_free_space(g)
print(f"side-by-side coils, {g.w * 1e3:.0f} mm apart, {g.n1} turns each")
print(f"  layered-media integral  M = {m0.real * 1e9:.4f} nH")
print(f"  filament sum (check)    M = {neumann_oracle(g) * 1e9:.4f} nH")

# A copper plate screens the field and lowers M; a permeable plate raises it.
w = 2 * math.pi * 1e5
copper = PlateSample(COPPER_CONDUCTIVITY, 1.0, 300e-6, 5e-3)
ferrite = PlateSample(0.0, 100.0, 1e-3, 5e-3)
for label, plate in (("copper 300 um", copper), ("mu_r 100 sheet", ferrite)):
    d = delta_L(g, plate, w)
    print(f"  {label:<15} dM = {d.real * 1e9:+.4f} nH  ({d.real / m0.real:+.1%})")

# Lift-off dependence at 100 kHz.
print("\ncopper plate, lift-off sweep at 100 kHz")
for h in (1e-3, 2e-3, 5e-3, 10e-3, 20e-3):
    d = delta_L(g, PlateSample(COPPER_CONDUCTIVITY, 1.0, 300e-6, h), w)
    print(f"  {h * 1e3:5.1f} mm  dM/M = {d.real / m0.real:+.3f}")

exc = Excitation(1e5, current=10e-3)
print(f"\npickup in air with 10 mA at 100 kHz: |V| = {abs(induced_voltage(m0, exc)) * 1e6:.3f} uV")
