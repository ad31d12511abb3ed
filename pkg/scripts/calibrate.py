#!/usr/bin/env python3
"""Re-run the calibration pilots behind docs/calibration.md.

Prints the measurement tables for the preset end states, the repose-bench
K/R_s/Z axes and the classifier inputs.  Everything is deterministic, so
the output reproduces the frozen numbers exactly on the same platform.

Usage: python3 scripts/calibrate.py [--quick]
"""

import argparse
import time

from mesop import _kernels
from mesop.scenarios import pedestal_pour, preset
from mesop.sweep import (
    ELASTICITY_K_VALUES,
    THRESHOLD_RATIO_VALUES,
    VISCOSITY_SCALE_VALUES,
    run_and_classify,
)


def row(tag, scenario, steps=None):
    t0 = time.time()
    report, _ = run_and_classify(scenario, steps=steps)
    print(f"{tag:34s} repose={report.repose_angle_deg:6.2f} "
          f"spread={report.spread_ratio:5.2f} frac={report.largest_cluster_fraction:4.2f} "
          f"cv={report.stress_cv:5.2f} ke={report.kinetic_energy_per_particle:8.4f} "
          f"ooze={report.ooze_rate if report.ooze_rate is not None else 0.0:7.3f} "
          f"-> {report.label:15s} [{time.time() - t0:4.0f}s]")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="shorten the bench axes (smoke run)")
    args = parser.parse_args()

    print("== compiling kernels")
    _kernels.warmup()

    print("== preset end states (their own durations)")
    for name in ("gas_jets", "granular_pile", "fluid_spread",
                 "granular_from_IP3", "paste_ooze"):
        row(name, preset(name))

    steps = 8000 if args.quick else 25_000
    print(f"== repose bench, elasticity axis (Z=10, R_s=1, {steps} steps)")
    for K in ELASTICITY_K_VALUES:
        row(f"K={K:g}", pedestal_pour(2, "IP3", K=K, Z=10.0, R_s=1.0), steps)

    print(f"== repose bench, threshold-ratio axis (K=1000, Z=10, {steps} steps)")
    for rs in THRESHOLD_RATIO_VALUES:
        tag = "IP3" if rs == 1.0 else "IP5"
        row(f"R_s={rs:g}", pedestal_pour(2, tag, K=1000.0, Z=10.0, R_s=rs), steps)

    print(f"== repose bench, viscosity scaling control (R_s=1, {steps} steps)")
    for z in VISCOSITY_SCALE_VALUES:
        row(f"Z={z:g}", pedestal_pour(2, "IP3", K=1000.0, Z=z, R_s=1.0), steps)


if __name__ == "__main__":
    main()
