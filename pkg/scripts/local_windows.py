"""Quantum vs semiclassical LDOS width for local perturbation windows.

Runs one sweep per window size and writes out/local_windows/beta_<b>.csv.

    python3 scripts/local_windows.py --N 400 --betas 0.2 0.4 0.7
"""

import argparse
import os

import numpy as np

from ldoslab.harness import sweeps
from ldoslab.harness.config import ExperimentConfig
from ldoslab.quantum import EigenCache


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=400)
    ap.add_argument("--betas", type=float, nargs="+", default=[0.2, 0.4, 0.7])
    ap.add_argument("--q0", type=float, default=0.01)
    ap.add_argument("--chi-max", type=float, default=60.0)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--cache", default=None)
    ap.add_argument("--out", default="out/local_windows")
    args = ap.parse_args()

    cache = EigenCache(args.cache) if args.cache else None
    for beta in args.betas:
        cfg = ExperimentConfig(
            N=[args.N],
            chi_grid=list(np.arange(0.0, args.chi_max + 1e-9, 2.0)),
            perturbation={"window": "local", "q0": args.q0, "beta": beta},
            threads=args.threads,
        )
        rows = sweeps.run_catmap_sweep(cfg, cache)
        out = os.path.join(args.out, f"beta_{beta:g}")
        sweeps.write_catmap_sweep(out, rows)
        print(f"beta={beta:g}: {len(rows)} points -> {out}/catmap_sweep.csv")


if __name__ == "__main__":
    main()
