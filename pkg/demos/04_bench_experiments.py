"""The five bench experiments, replayed with the default (estimated) sensor.

Run:  python demos/04_bench_experiments.py [--threads N]
"""

import argparse

from dualem.scenarios import COMMON, DIFFERENTIAL, KINDS, run_scenario, spec_for

ap = argparse.ArgumentParser()
ap.add_argument("--threads", type=int, default=4)
args = ap.parse_args()

for kind in KINDS:
    rows = run_scenario(spec_for(kind), args.threads)
    print(f"\n{kind}  ({rows[0].normalization} normalization; flags {','.join(rows[0].flags)})")
    for r in rows:
        parts = []
        if DIFFERENTIAL in r.readouts:
            parts.append(f"diff {r.normalized[DIFFERENTIAL]:.4f}")
        if COMMON in r.readouts:
            parts.append(f"common {r.normalized[COMMON]:.4f}  C_m {r.c_m * 1e12:.3f} pF")
        print(f"  {str(r.sweep_value):>4}: " + "   ".join(parts))
