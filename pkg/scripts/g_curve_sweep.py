#!/usr/bin/env python3
"""Sweep the scalar root equation behind the exponential-model rate solver.

For exponential holding times the optimal area tilt a2* solves g(a2) = a2*z1
with g(a2) = log((a2*z2 + 1)/(a2*(z2 - z1) + 1)) on (-1/z2, 1/(z1 - z2)).
This script emits (a2, g, h) curves for z1 = 1 and three z2 values whose
roots fall left of, at, and right of zero, plus the solver's root for each.

Usage: python scripts/g_curve_sweep.py [--out-dir DIR]
"""

import argparse
import math
import os

import numpy as np

from renewal_ldp.cli import emit_plot_data
from renewal_ldp.rates import rate_ld_poisson


def sweep(z1: float, z2: float, n: int = 400) -> list[dict]:
    lo, hi = -1.0 / z2, 1.0 / (z1 - z2)
    pad = 0.02 * (hi - lo)
    rows = []
    for a2 in np.linspace(lo + pad, hi - pad, n):
        g = math.log((a2 * z2 + 1.0) / (a2 * (z2 - z1) + 1.0))
        rows.append({"a2": float(a2), "g": g, "h": float(a2 * z1)})
    return rows


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("--z1", type=float, default=1.0)
    args = parser.parse_args()

    z1 = args.z1
    for z2 in (0.25 * z1, 0.5 * z1, 0.75 * z1):
        res = rate_ld_poisson(1.0, z1, z2)
        a2_star = res.argmax_tilt[1]
        side = "zero" if a2_star == 0.0 else ("negative" if a2_star < 0 else "positive")
        path = os.path.join(args.out_dir, f"g_curve_z2_{z2:g}.csv")
        emit_plot_data(sweep(z1, z2), "csv", path)
        print(f"z1={z1:g} z2={z2:g}: root a2*={a2_star:.6g} ({side}), "
              f"rate={res.value:.6g} -> {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
