"""Capacitive channel: the 2-D cross-section, segment couplings and sensitivity.

Run:  python demos/02_capacitive_section.py [--svg out_dir]
"""

import argparse
from pathlib import Path

import numpy as np

from dualem.electrostatic import (
    SampleLayer,
    aggregate_coupling,
    default_cross_section,
    segment_capacitance_matrix,
    sensitivity_map,
    write_heatmap_svg,
)

ap = argparse.ArgumentParser()
ap.add_argument("--svg", type=Path, help="write the sensitivity heat map here")
args = ap.parse_args()

model = default_cross_section()
cm = segment_capacitance_matrix(model)
print(f"{len(cm.names)} trace segments, cell {model.cell * 1e3:.2f} mm, "
      f"extrusion {model.extrusion_length * 1e3:.1f} mm")
print(f"raw matrix asymmetry {cm.raw_asymmetry:.1e}")

print("\ntransmitter segment -> whole receiver")
for name in model.transmitter:
    print(f"  {name}: {cm.coupling_to(name, model.receiver) * 1e15:7.1f} fF")
a, b = cm.largest_pair()
print(f"strongest single pair {a}-{b}: {cm.coupling(a, b) * 1e15:.1f} fF")

# Dielectric loading: a 3 mm sheet on the sensor face.
print("\naggregate coupling with a 3 mm sample")
for eps in (1.0, 3.0, 10.0, 80.0):
    c = aggregate_coupling(model.with_layers([SampleLayer(eps, 3e-3)]))
    print(f"  eps_r {eps:4.0f}: {c * 1e12:.4f} pF")

s = sensitivity_map(model)
xc, col = s.column_profile()
print(f"\nsensitivity column peak at x = {xc[np.argmax(col)] * 1e3:+.2f} mm")
if args.svg:
    args.svg.mkdir(parents=True, exist_ok=True)
    write_heatmap_svg(args.svg / "sensitivity.svg", s, quantity="sensitivity")
    print(f"wrote {args.svg / 'sensitivity.svg'}")
