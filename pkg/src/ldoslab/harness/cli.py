"""Command-line entry point: ``ldoslab <subcommand> [--config PATH] ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from .. import quantum
from . import sweeps
from .config import ConfigError, load_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser():
    p = argparse.ArgumentParser(prog="ldoslab", description="LDOS width experiments for the perturbed cat map and stadium.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("catmap-sweep", "quantum and semiclassical LDOS widths over chi_grid"),
        ("catmap-ldos", "LDOS histogram and periodized-Lorentzian fit at a single chi"),
        ("dephasing", "survival amplitude vs dephasing representation"),
        ("stadium-sweep", "semiclassical stadium width over dx_grid"),
        ("po-uniformity", "periodic-orbit action-difference uniformity diagnostic"),
        ("selftest", "run the acceptance criteria"),
    ]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="JSON experiment config")
        s.add_argument("--out", help="output directory (overrides out_dir)")
        s.add_argument("--threads", type=int, help="worker threads")
        s.add_argument("--cache", help="eigensystem cache directory")
        s.add_argument("--seed", type=int, help="Monte Carlo seed")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "selftest":
        from .acceptance import run_all

        results = run_all()
        failed = [r.id for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {' '.join(failed)}" if failed else ""))
        return EXIT_FAIL if failed else EXIT_OK

    try:
        cfg = load_config(args.config, out_dir=args.out, threads=args.threads, cache_dir=args.cache, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cache = quantum.EigenCache(cfg.cache_dir) if cfg.cache_dir else None

    if args.command == "catmap-sweep":
        rows = sweeps.run_catmap_sweep(cfg, cache)
        sweeps.write_catmap_sweep(cfg.out_dir, rows)
        return EXIT_FAIL if any(r.status != "ok" for r in rows) else EXIT_OK
    if args.command == "catmap-ldos":
        res = sweeps.catmap_ldos(cfg, cache)
        sweeps.write_histogram(cfg.out_dir, res)
        print(f"sigma_quantum={res['sigma_quantum']:.6g} fit_gamma={res['fit'].gamma:.6g} "
              f"gamma_sc={res['gamma_sc']:.6g} rms={res['fit'].residual:.3g}")
        return EXIT_OK
    if args.command == "dephasing":
        sweeps.write_dephasing(cfg.out_dir, sweeps.dephasing_experiment(cfg, cache))
        return EXIT_OK
    if args.command == "po-uniformity":
        sweeps.write_po(cfg.out_dir, sweeps.po_uniformity(cfg), cfg.n_max)
        return EXIT_OK
    if args.command == "stadium-sweep":
        rows = sweeps.run_stadium_sweep(cfg)
        sweeps.write_stadium(cfg.out_dir, rows, cfg.x0 if cfg.export_boundary else None)
        return EXIT_FAIL if any(r[1] != r[1] for r in rows) else EXIT_OK
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
