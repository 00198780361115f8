"""Semiclassical LDOS width of the quarter stadium under a shape change x0 -> x0 + dx.

    python3 scripts/stadium_width.py --x0 1.0 --dx-max 0.1 --points 50
"""

import argparse

import numpy as np

from ldoslab import stadium
from ldoslab.harness import sweeps
from ldoslab.harness.config import ExperimentConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--x0", type=float, default=1.0)
    ap.add_argument("--dx-max", type=float, default=0.1)
    ap.add_argument("--points", type=int, default=50)
    ap.add_argument("--p-mag", type=float, default=200.0)
    ap.add_argument("--mass", type=float, default=0.5)
    ap.add_argument("--out", default="out/stadium")
    args = ap.parse_args()

    cfg = ExperimentConfig(system="stadium", x0=args.x0, p_mag=args.p_mag, mass=args.mass,
                           dx_grid=list(np.linspace(0.0, args.dx_max, args.points)))
    rows = sweeps.run_stadium_sweep(cfg)
    sweeps.write_stadium(args.out, rows, args.x0)
    shape = stadium.shape_from_x(args.x0)
    print(f"r = {shape.r:.6f}, P = {shape.perimeter:.6f}, tau = {stadium.mean_bounce_time(shape, args.p_mag, args.mass):.6g}")
    peak = max(rows, key=lambda r: r[1])
    print(f"peak gamma {peak[1]:.4g} at dx = {peak[0]:.4g}")


if __name__ == "__main__":
    main()
