"""Semiclassical decay rate and LDOS width for the perturbed cat map."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .maps import (
    TWO_SHEAR,
    EffectivePlanck,
    PerturbationSpec,
    action_diff_one_step,
    evolve_with_action,
    kick_potential,
    periodic_orbits,
    position_kick_potential,
)

WIDTH_FACTOR = math.tan(0.35 * math.pi)  # 70% half-width of a unit Lorentzian
SATURATION_WIDTH = 0.7 * math.pi
PERIODIC_LINEAR_COEF = 0.24

QUAD_TOL = 1e-8
QUAD_MIN_PANELS = 16
QUAD_MAX_PANELS = 2**22


class QuadratureError(RuntimeError):
    def __init__(self, msg, estimate, error):
        super().__init__(msg)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class DecayParams:
    gamma: float
    eta: float
    alpha: float
    tau: float
    A: float


@dataclass(frozen=True)
class PhaseAverage:
    value: complex
    quadrature_error: float


def _midpoint_nodes(a, b, n):
    h = (b - a) / n
    return a + (np.arange(n) + 0.5) * h, h


def integrate_midpoint(f, a, b, tol=QUAD_TOL, n0=QUAD_MIN_PANELS, nmax=QUAD_MAX_PANELS):
    """Composite midpoint rule, doubling panels until successive sums agree.

    ``f`` maps an array of nodes to an array of (possibly vector-valued,
    last axis) integrand values. Returns (integral, error estimate).
    """
    x, h = _midpoint_nodes(a, b, n0)
    prev = h * np.sum(f(x), axis=0)
    n = n0
    while True:
        n *= 2
        x, h = _midpoint_nodes(a, b, n)
        cur = h * np.sum(f(x), axis=0)
        err = float(np.max(np.abs(cur - prev)))
        if err < tol:
            return cur, err
        if n >= nmax:
            raise QuadratureError(f"midpoint rule not converged at {n} panels", cur, err)
        prev = cur


def integrate_midpoint_2d(f, a, b, c, d, tol=QUAD_TOL, n0=QUAD_MIN_PANELS, nmax=2**12):
    """Tensor-product midpoint rule on [a, b] x [c, d], refined by doubling."""
    def rule(n):
        x, hx = _midpoint_nodes(a, b, n)
        y, hy = _midpoint_nodes(c, d, n)
        return hx * hy * np.sum(f(x[:, None], y[None, :]))

    prev = rule(n0)
    n = n0
    while True:
        n *= 2
        cur = rule(n)
        err = float(abs(cur - prev))
        if err < tol:
            return cur, err
        if n >= nmax:
            raise QuadratureError(f"2-D midpoint rule not converged at {n}^2 panels", cur, err)
        prev = cur


def _deficit_integrand(phase):
    # 1 - exp(-i phi) split so the real part avoids cancellation at small phi
    return np.stack([2.0 * np.sin(0.5 * phase) ** 2, np.sin(phase)], axis=-1)


def phase_deficit(spec: PerturbationSpec, delta_k: float, planck: EffectivePlanck):
    """<1 - exp(-i dS/hbar)> over the perturbed region, with error estimate."""
    hbar = planck.hbar
    if delta_k == 0.0:
        return 0j, 0.0
    if spec.kind == TWO_SHEAR:
        dspec = spec.with_k(delta_k)

        def f(q, p):
            phase = (-kick_potential(q, dspec) - position_kick_potential(p, dspec)) / hbar
            return 1.0 - np.exp(-1j * phase)

        val, err = integrate_midpoint_2d(f, 0.0, 1.0, 0.0, 1.0)
        return complex(val), err
    # momentum shear only: the integrand does not depend on p
    a, b = (spec.q0, spec.q1) if spec.window == "local" else (0.0, 1.0)

    def g(q):
        return _deficit_integrand(action_diff_one_step(q, 0.0, delta_k, spec) / hbar)

    val, err = integrate_midpoint(g, a, b, tol=QUAD_TOL * (b - a))
    return complex(val[0], val[1]) / (b - a), err / (b - a)


def phase_average(spec: PerturbationSpec, delta_k: float, planck: EffectivePlanck) -> PhaseAverage:
    """Average of exp(-i dS/hbar) over the perturbed rectangle."""
    d, err = phase_deficit(spec, delta_k, planck)
    return PhaseAverage(1.0 - d, err)


def gamma(spec: PerturbationSpec, delta_k: float, planck: EffectivePlanck, tau: float = 1.0, A: float = 1.0) -> DecayParams:
    """Decay rate eta * (1 - Re<exp(-i dS/hbar)>) with eta = alpha / (tau * A)."""
    if tau <= 0 or A <= 0:
        raise ValueError("tau and A must be positive")
    alpha = spec.area
    eta = alpha / (tau * A)
    d, _ = phase_deficit(spec, delta_k, planck)
    return DecayParams(gamma=eta * d.real, eta=eta, alpha=alpha, tau=tau, A=A)


def sigma_sc(params) -> float:
    """70% width of the Lorentzian with decay rate gamma."""
    g = getattr(params, "gamma", params)
    if g < 0:
        raise ValueError("gamma must be non-negative")
    return WIDTH_FACTOR * g


def _periodized_cubic(s, linear=PERIODIC_LINEAR_COEF):
    return s * (1.0 + linear * s - (s / math.pi) ** 2)


def _saturation_onset(linear=PERIODIC_LINEAR_COEF):
    # smallest positive root of cubic(s) = 0.7 pi; beyond it the cubic is not trusted
    roots = np.roots([-1.0 / math.pi**2, linear, 1.0, -SATURATION_WIDTH])
    real = sorted(r.real for r in roots if abs(r.imag) < 1e-12 and r.real > 0)
    return real[0] if real else math.inf


def sigma_sc_periodized(sigma: float, linear: float = PERIODIC_LINEAR_COEF) -> float:
    """Width corrected for the compact eigenphase spectrum, capped at 0.7 pi."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma >= _saturation_onset(linear):
        return SATURATION_WIDTH
    return min(_periodized_cubic(sigma, linear), SATURATION_WIDTH)


# --- dephasing representation ----------------------------------------------


@dataclass(frozen=True)
class DephasingResult:
    amplitude: np.ndarray  # complex, index t = 0..m
    stderr: np.ndarray  # standard error of the complex mean
    samples: int

    @property
    def t(self):
        return np.arange(len(self.amplitude))


DEFAULT_CHUNK = 1 << 15


def _dephasing_chunk(index, size, seed, m, spec, delta_k, hbar):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))
    q = rng.random(size)
    p = rng.random(size)
    acc = np.zeros(size)
    s1 = np.empty(m + 1, dtype=complex)
    s2 = np.empty(m + 1)
    s1[0] = size
    s2[0] = size
    for t in range(1, m + 1):
        q, p, ds = evolve_with_action(q, p, spec, delta_k)
        acc += ds
        z = np.exp(-1j * acc / hbar)
        s1[t] = z.sum()
        s2[t] = np.sum(np.abs(z) ** 2)
    return s1, s2


def dephasing_fidelity(
    m: int,
    spec: PerturbationSpec,
    delta_k: float,
    planck: EffectivePlanck,
    samples: int,
    seed: int = 0,
    workers: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> DephasingResult:
    """Monte Carlo estimate of the fidelity amplitude in the dephasing representation.

    Initial points are uniform on the torus and follow the reference map
    ``spec`` (strength spec.k). Sample i always belongs to chunk i // chunk
    with its own Philox stream, so results do not depend on ``workers``.
    """
    if m < 0 or samples < 1:
        raise ValueError("need m >= 0 and samples >= 1")
    sizes = [min(chunk, samples - i) for i in range(0, samples, chunk)]
    args = [(c, n, seed, m, spec, delta_k, planck.hbar) for c, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda a: _dephasing_chunk(*a), args))
    else:
        parts = [_dephasing_chunk(*a) for a in args]
    s1 = np.zeros(m + 1, dtype=complex)
    s2 = np.zeros(m + 1)
    for a, b in parts:  # fixed reduction order
        s1 += a
        s2 += b
    mean = s1 / samples
    if samples > 1:
        var = np.maximum(s2 - samples * np.abs(mean) ** 2, 0.0) / (samples - 1)
        se = np.sqrt(var / samples)
    else:
        se = np.full(m + 1, np.inf)
    mean[0] = 1.0
    se[0] = 0.0
    return DephasingResult(mean, se, samples)


# --- periodic-orbit action diagnostic ----------------------------------------


@dataclass(frozen=True)
class UniformityReport:
    periods: np.ndarray  # primitive period of each orbit
    action_diffs: np.ndarray  # dS_mu summed around each orbit
    phases: np.ndarray  # dS_mu / (2 pi hbar) mod 1
    ks_statistic: float

    @property
    def n_orbits(self):
        return len(self.periods)


def po_action_uniformity(n_max: int, delta_k: float, spec: PerturbationSpec, planck: EffectivePlanck) -> UniformityReport:
    """Distribution of orbit action differences in units of 2 pi hbar, mod 1."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    orbits = periodic_orbits(n_max)
    periods = np.array([len(o) for o in orbits])
    dS = np.empty(len(orbits))
    for i, orb in enumerate(orbits):
        pts = np.array([[float(q), float(p)] for q, p in orb])
        # kick points of the unperturbed orbit are the orbit points themselves
        dS[i] = np.sum(action_diff_one_step(pts[:, 0], pts[:, 1], delta_k, spec))
    phases = np.mod(dS / (2 * math.pi * planck.hbar), 1.0)
    ks = float(stats.kstest(phases, "uniform").statistic)
    return UniformityReport(periods, dS, phases, ks)
