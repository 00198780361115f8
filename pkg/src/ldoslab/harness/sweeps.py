"""Sweep orchestration for the cat map and stadium experiments."""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .. import distributions as dist
from .. import quantum, semiclassics, stadium
from ..maps import EffectivePlanck, PerturbationSpec
from .config import ExperimentConfig

log = logging.getLogger(__name__)

CATMAP_COLUMNS = ["N", "chi", "sigma_quantum", "gamma", "sigma_sc", "sigma_sc_periodized", "fit_gamma", "status"]
TIMING_COLUMNS = ["N", "chi", "seconds"]
STADIUM_COLUMNS = ["delta_x", "gamma", "sigma_sc"]
HIST_COLUMNS = ["omega_bin_center", "density", "fit_density"]
DEPHASING_COLUMNS = ["t", "dr_re", "dr_im", "dr_abs", "dr_stderr", "quantum_re", "quantum_im", "quantum_abs", "exp_decay"]
PO_COLUMNS = ["chi", "n_max", "n_orbits", "ks_statistic"]
PO_PHASE_COLUMNS = ["chi", "period", "action_diff", "phase"]


@dataclass
class SweepRow:
    N: int
    chi: float
    sigma_quantum: float
    gamma: float
    sigma_sc: float
    sigma_sc_periodized: float
    fit_gamma: float
    status: str = "ok"
    timing: float = 0.0


def eigensystem(N, spec, cache: quantum.EigenCache | None = None, knobs=quantum.QuantizationKnobs()):
    """Cache-aware propagator diagonalization."""
    if cache is not None:
        try:
            es = cache.load(N, spec, knobs)
        except quantum.CacheError as exc:
            log.warning("discarding corrupt cache entry for N=%d k=%r: %s", N, spec.k, exc)
            es = None
        if es is not None:
            return es
    es = quantum.eigendecompose(quantum.build_propagator(N, spec, knobs))
    if cache is not None:
        cache.store(es, N, spec, knobs)
    return es


def fit_ldos(sample, bins, gamma0):
    centers, density = dist.histogram(sample, bins)
    try:
        fit = dist.fit_periodized_lorentzian(centers, density, gamma0=gamma0, center0=dist.circular_mean(sample))
    except dist.FitError as exc:
        fit = exc.best
    return centers, density, fit


def catmap_point(N, chi, spec0: PerturbationSpec, E0, bins=256, cache=None, fit=True, linear=semiclassics.PERIODIC_LINEAR_COEF):
    """Quantum width and semiclassical prediction at one chi = N * delta_k."""
    t0 = time.perf_counter()
    dk = chi / N
    planck = EffectivePlanck(N)
    g = semiclassics.gamma(spec0, dk, planck)
    s_sc = semiclassics.sigma_sc(g)
    s_p = semiclassics.sigma_sc_periodized(s_sc, linear)
    try:
        E1 = E0 if dk == 0.0 else eigensystem(N, spec0.with_k(spec0.k + dk), cache)
    except quantum.EigenSolverError as exc:
        log.warning("eigensolver failed at N=%d chi=%g: %s", N, chi, exc)
        return SweepRow(N, chi, math.nan, g.gamma, s_sc, s_p, math.nan, "failed", time.perf_counter() - t0)
    d = quantum.ldos(E0, E1)
    sample = d.sample()
    sigma = dist.width_70(sample)
    fit_gamma = 0.0
    if fit and sigma > 0:
        # start from the Lorentzian whose 70% width matches the data
        _, _, f = fit_ldos(sample, bins, max(sigma / semiclassics.WIDTH_FACTOR, 1e-3))
        fit_gamma = f.gamma
    return SweepRow(N, chi, sigma, g.gamma, s_sc, s_p, fit_gamma, "ok", time.perf_counter() - t0)


def run_catmap_sweep(config: ExperimentConfig, cache=None, fit=True, linear=semiclassics.PERIODIC_LINEAR_COEF):
    """Rows for every (N, chi) pair, in config order regardless of threading."""
    spec0 = config.spec()
    rows = []
    for N in config.N:
        E0 = eigensystem(N, spec0, cache)

        def job(chi, N=N, E0=E0):
            return catmap_point(N, chi, spec0, E0, config.bins, cache, fit, linear)

        if config.threads > 1:
            with ThreadPoolExecutor(config.threads) as ex:
                rows.extend(ex.map(job, config.chi_grid))
        else:
            rows.extend(job(c) for c in config.chi_grid)
    return rows


def catmap_ldos(config: ExperimentConfig, cache=None):
    """Single-chi LDOS histogram with a periodized-Lorentzian fit."""
    N = config.N[0]
    spec0 = config.spec()
    E0 = eigensystem(N, spec0, cache)
    dk = config.chi / N
    E1 = eigensystem(N, spec0.with_k(spec0.k + dk), cache)
    sample = quantum.ldos(E0, E1).sample()
    sigma = dist.width_70(sample)
    centers, density, fit = fit_ldos(sample, config.bins, max(sigma / semiclassics.WIDTH_FACTOR, 1e-3))
    return {
        "centers": centers,
        "density": density,
        "fit": fit,
        "sigma_quantum": sigma,
        "gamma_sc": semiclassics.gamma(spec0, dk, EffectivePlanck(N)).gamma,
    }


def dephasing_experiment(config: ExperimentConfig, cache=None):
    """Quantum survival amplitude, dephasing representation and exp(-gamma t) side by side."""
    N = config.N[0]
    spec0 = config.spec()
    planck = EffectivePlanck(N)
    dk = config.chi / N
    E0 = eigensystem(N, spec0, cache)
    E1 = eigensystem(N, spec0.with_k(spec0.k + dk), cache)
    qa = quantum.survival_amplitude(quantum.ldos(E0, E1), config.m_max)
    dr = semiclassics.dephasing_fidelity(config.m_max, spec0, dk, planck, config.mc_samples, config.seed, config.threads)
    g = semiclassics.gamma(spec0, dk, planck).gamma
    t = np.arange(config.m_max + 1)
    return {"t": t, "quantum": qa, "dr": dr, "exp_decay": np.exp(-g * t), "gamma": g}


def po_uniformity(config: ExperimentConfig):
    N = config.N[0]
    spec0 = config.spec()
    planck = EffectivePlanck(N)
    return [(chi, semiclassics.po_action_uniformity(config.n_max, chi / N, spec0, planck)) for chi in config.chi_grid]


def run_stadium_sweep(config: ExperimentConfig):
    """(delta_x, gamma, sigma_sc) rows; geometry failures become NaN rows."""
    rows = []

    def job(dx):
        try:
            g = stadium.gamma_stadium(config.x0, dx, config.p_mag, config.mass)
            return (dx, g.gamma, stadium.sigma_sc_stadium(g))
        except stadium.GeometryError as exc:
            log.warning("stadium point delta_x=%g failed: %s", dx, exc)
            return (dx, math.nan, math.nan)

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as ex:
            rows = list(ex.map(job, config.dx_grid))
    else:
        rows = [job(dx) for dx in config.dx_grid]
    return rows


# --- CSV output -------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_catmap_sweep(out_dir, rows):
    d = [asdict(r) for r in rows]
    write_csv(os.path.join(out_dir, "catmap_sweep.csv"), CATMAP_COLUMNS, [[r[c] for c in CATMAP_COLUMNS] for r in d])
    # wall-clock timings vary run to run, so they live outside the results file
    write_csv(os.path.join(out_dir, "catmap_sweep_timing.csv"), TIMING_COLUMNS, [[r["N"], r["chi"], r["timing"]] for r in d])


def write_histogram(out_dir, res):
    rows = zip(res["centers"], res["density"], res["fit"].curve(res["centers"]))
    write_csv(os.path.join(out_dir, "catmap_ldos.csv"), HIST_COLUMNS, rows)


def write_dephasing(out_dir, res):
    dr = res["dr"]
    rows = []
    for t in res["t"]:
        a, q = dr.amplitude[t], res["quantum"][t]
        rows.append([int(t), a.real, a.imag, abs(a), dr.stderr[t], q.real, q.imag, abs(q), res["exp_decay"][t]])
    write_csv(os.path.join(out_dir, "dephasing.csv"), DEPHASING_COLUMNS, rows)


def write_po(out_dir, results, n_max):
    write_csv(
        os.path.join(out_dir, "po_uniformity.csv"),
        PO_COLUMNS,
        [[chi, n_max, rep.n_orbits, rep.ks_statistic] for chi, rep in results],
    )
    phase_rows = []
    for chi, rep in results:
        phase_rows.extend([chi, int(p), s, f] for p, s, f in zip(rep.periods, rep.action_diffs, rep.phases))
    write_csv(os.path.join(out_dir, "po_phases.csv"), PO_PHASE_COLUMNS, phase_rows)


def write_stadium(out_dir, rows, boundary_x0=None, points=400):
    write_csv(os.path.join(out_dir, "stadium_sweep.csv"), STADIUM_COLUMNS, rows)
    if boundary_x0 is not None:
        s = stadium.shape_from_x(boundary_x0)
        X, Y, *_ = s.boundary(np.linspace(0.0, s.perimeter, points, endpoint=False))
        write_csv(os.path.join(out_dir, "stadium_boundary.csv"), ["x", "y"], zip(X, Y))
