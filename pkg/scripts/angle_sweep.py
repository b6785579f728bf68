#!/usr/bin/env python3
"""Sweep the twist strength and record the section angle diagnostics.

For the flat twisted torus the angle is arctan(c) and the operator
degenerates at c = 1; for the twisted sphere bundle the worst angle is
arctan(beta0 * max sin(rho) / r). The sweep writes one CSV row per
parameter value so the approach to the critical angle can be plotted.

    python3 scripts/angle_sweep.py --metric twisted_flat --stop 1.2
    python3 scripts/angle_sweep.py --metric sphere_twist --stop 1.5 --r 1.0
"""

import argparse
import csv
import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from pscbench.grids import SPHERE, TORUS, DomainSpec, w_domains
from pscbench.metrics import make_metric
from pscbench.normal import normal_frame


def sweep_value(metric, value, resolution, r):
    if metric == "twisted_flat":
        spec = DomainSpec(TORUS, 2, (resolution, resolution), 5)
        params = {"c": value}
    else:
        spec = DomainSpec(SPHERE, 2, (resolution,), 5)
        params = {"r": r, "beta0": value}
    y = w_domains(spec)["y"]
    frame = normal_frame(make_metric(metric, y, **params))
    return frame


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--metric", choices=("twisted_flat", "sphere_twist"),
                    default="twisted_flat")
    ap.add_argument("--start", type=float, default=0.0)
    ap.add_argument("--stop", type=float, default=1.2)
    ap.add_argument("--steps", type=int, default=25)
    ap.add_argument("--resolution", type=int, default=24)
    ap.add_argument("--r", type=float, default=1.0,
                    help="sphere radius (sphere_twist only)")
    ap.add_argument("--out", default="angle_sweep.csv")
    args = ap.parse_args()

    rows = []
    for value in np.linspace(args.start, args.stop, args.steps):
        try:
            fr = sweep_value(args.metric, float(value), args.resolution,
                             args.r)
        except Exception as exc:  # degenerate metrics are data, not crashes
            print(f"{value:8.4f}  rejected: {exc}")
            continue
        rows.append({
            "value": f"{value:.12g}",
            "max_angle": f"{fr.max_angle:.12g}",
            "margin": f"{fr.margin:.12g}",
            "elliptic": "true" if fr.is_elliptic else "false",
        })
        mark = "" if fr.is_elliptic else "  <-- not elliptic"
        print(f"{value:8.4f}  angle {fr.max_angle:8.5f}  "
              f"margin {fr.margin:9.5f}{mark}")

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out} ({len(rows)} rows); "
          f"critical angle pi/4 = {math.pi / 4:.6f}")


if __name__ == "__main__":
    main()
