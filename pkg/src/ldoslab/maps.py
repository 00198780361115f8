"""Classical perturbed cat map on the unit torus.

The unperturbed map is the hyperbolic automorphism M = [[2, 1], [3, 2]].
Perturbations are nonlinear shears applied after the linear step:

    (q', p')  = M (q, p)               mod 1
    p''       = p' + eps(q', k)        mod 1
    q'''      = q' + epsbar(p'', k)    mod 1   (two-shear variant only)

Each shear is generated by a kick potential (V for the momentum kick,
W for the position kick), and the one-step action difference between
two strengths is minus the difference of those generating functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Literal, NamedTuple

import numpy as np

CAT_MATRIX = np.array([[2, 1], [3, 2]], dtype=np.int64)

MOMENTUM_SHEAR = "momentum_shear"
TWO_SHEAR = "momentum_plus_position_shear"

TWO_PI = 2.0 * math.pi
FOUR_PI2 = 4.0 * math.pi**2

# periodic_points refuses determinants whose points are not exactly
# representable as doubles.
MAX_DET = 2**53


class TorusPoint(NamedTuple):
    q: float
    p: float

    @classmethod
    def wrapped(cls, q, p):
        return cls(float(wrap(q)), float(wrap(p)))


@dataclass(frozen=True)
class PerturbationSpec:
    """Which shear(s) act, how strongly, and where.

    ``window="global"`` applies the shear on the whole torus. With
    ``window="local"`` the momentum shear only acts for q in
    [q0, q0 + beta]; ``window_mode`` picks whether the shear profile is
    squeezed into the window ("rescaled", vanishing smoothly at both
    edges) or simply cut out of the global profile ("truncated").
    """

    kind: Literal["momentum_shear", "momentum_plus_position_shear"] = MOMENTUM_SHEAR
    k: float = 0.0
    window: Literal["global", "local"] = "global"
    q0: float = 0.0
    beta: float = 1.0
    window_mode: Literal["rescaled", "truncated"] = "rescaled"

    def __post_init__(self):
        if self.kind not in (MOMENTUM_SHEAR, TWO_SHEAR):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.window not in ("global", "local"):
            raise ValueError(f"unknown window {self.window!r}")
        if self.window_mode not in ("rescaled", "truncated"):
            raise ValueError(f"unknown window_mode {self.window_mode!r}")
        if self.window == "local":
            if not (0.0 <= self.q0 < 1.0):
                raise ValueError("q0 must lie in [0, 1)")
            if not (0.0 < self.beta <= 1.0):
                raise ValueError("beta must lie in (0, 1]")
            if self.q0 + self.beta > 1.0 + 1e-12:
                raise ValueError("window [q0, q0 + beta] must fit inside [0, 1]")
            if self.kind == TWO_SHEAR:
                raise ValueError("the two-shear perturbation is only defined globally")

    @property
    def area(self) -> float:
        """Phase-space area of the perturbed region."""
        return self.beta if self.window == "local" else 1.0

    @property
    def q1(self) -> float:
        return self.q0 + self.beta if self.window == "local" else 1.0

    def with_k(self, k: float) -> "PerturbationSpec":
        return replace(self, k=float(k))

    def canonical(self) -> dict:
        """Field dict with window fields normalised, used for hashing."""
        d = {"kind": self.kind, "k": float(self.k), "window": self.window}
        if self.window == "local":
            d.update(q0=float(self.q0), beta=float(self.beta), window_mode=self.window_mode)
        return d


@dataclass(frozen=True)
class EffectivePlanck:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")

    @property
    def hbar(self) -> float:
        return 1.0 / (TWO_PI * self.N)


def wrap(x):
    """Reduce into [0, 1)."""
    x = np.asarray(x, dtype=float)
    y = x - np.floor(x)
    # floor-based wrap can return exactly 1.0 for tiny negative inputs
    return np.where(y >= 1.0, 0.0, y)


def _profile_shear(x):
    return np.cos(TWO_PI * x) - np.cos(2 * TWO_PI * x)


def _profile_action(x):
    # -V per unit strength for the global momentum shear; d/dx = 2pi * _profile_shear
    return np.sin(TWO_PI * x) - 0.5 * np.sin(2 * TWO_PI * x)


def _window_coords(q, spec):
    q = np.asarray(q, dtype=float)
    inside = (q >= spec.q0) & (q <= spec.q1)
    return q, inside


def shear_momentum(q, spec: PerturbationSpec):
    """Momentum kick eps(q, k) added after the linear step."""
    k = spec.k
    if spec.window == "global":
        return k / TWO_PI * _profile_shear(np.asarray(q, dtype=float))
    q, inside = _window_coords(q, spec)
    if spec.window_mode == "rescaled":
        u = (q - spec.q0) / spec.beta
        return np.where(inside, k / TWO_PI * _profile_shear(u), 0.0)
    return np.where(inside, k / TWO_PI * _profile_shear(q), 0.0)


def kick_potential(q, spec: PerturbationSpec):
    """Potential V(q) with -dV/dq = eps(q).

    Global and rescaled-local potentials are continuous and periodic. In
    truncated mode V is the global potential cut to the window, so it jumps
    at the window edges; truncated windows that tile [0, 1] add up to the
    global potential.
    """
    k = spec.k
    if spec.window == "global":
        return -k / FOUR_PI2 * _profile_action(np.asarray(q, dtype=float))
    q, inside = _window_coords(q, spec)
    if spec.window_mode == "rescaled":
        u = (q - spec.q0) / spec.beta
        return np.where(inside, -k * spec.beta / FOUR_PI2 * _profile_action(u), 0.0)
    return np.where(inside, -k / FOUR_PI2 * _profile_action(q), 0.0)


def shear_position(p, spec: PerturbationSpec):
    """Position kick epsbar(p, k); zero unless the two-shear variant is active."""
    p = np.asarray(p, dtype=float)
    if spec.kind != TWO_SHEAR:
        return np.zeros_like(p)
    return -spec.k / TWO_PI * (np.sin(3 * TWO_PI * p) / 3 + np.cos(2 * TWO_PI * p) / 2)


def position_kick_potential(p, spec: PerturbationSpec):
    """W(p) with dW/dp = epsbar(p), periodic on [0, 1)."""
    p = np.asarray(p, dtype=float)
    if spec.kind != TWO_SHEAR:
        return np.zeros_like(p)
    return spec.k / FOUR_PI2 * (np.cos(3 * TWO_PI * p) / 9 - np.sin(2 * TWO_PI * p) / 4)


def cat_step(q, p):
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    return wrap(2 * q + p), wrap(3 * q + 2 * p)


def evolve(q, p, spec: PerturbationSpec | None = None):
    """One iteration of the (perturbed) map; works elementwise on arrays."""
    q1, p1 = cat_step(q, p)
    if spec is None or spec.k == 0.0:
        return q1, p1
    p2 = wrap(p1 + shear_momentum(q1, spec))
    if spec.kind == TWO_SHEAR:
        q1 = wrap(q1 + shear_position(p2, spec))
    return q1, p2


def evolve_point(point: TorusPoint, spec: PerturbationSpec | None = None) -> TorusPoint:
    q, p = evolve(point.q, point.p, spec)
    return TorusPoint(float(q), float(p))


def action_diff_one_step(q, p, delta_k: float, spec: PerturbationSpec):
    """Action difference for one step between strengths k + delta_k and k.

    ``q`` is where the momentum kick is evaluated (the position after the
    linear step) and ``p`` is where the position kick is evaluated (the
    momentum after the momentum kick). Both kicks are linear in k, so the
    result only depends on ``delta_k``.
    """
    dspec = spec.with_k(delta_k)
    return -kick_potential(q, dspec) - position_kick_potential(p, dspec)


def evolve_with_action(q, p, spec: PerturbationSpec, delta_k: float):
    """Evolve under ``spec`` and return the one-step action difference to k + delta_k.

    The action difference is evaluated at the kick points of the orbit
    being followed, as needed by the dephasing representation.
    """
    q1, p1 = cat_step(q, p)
    ds = -kick_potential(q1, spec.with_k(delta_k))
    if spec.k != 0.0:
        p1 = wrap(p1 + shear_momentum(q1, spec))
    if spec.kind == TWO_SHEAR:
        ds = ds - position_kick_potential(p1, spec.with_k(delta_k))
        if spec.k != 0.0:
            q1 = wrap(q1 + shear_position(p1, spec))
    return q1, p1, ds


# --- periodic points of the unperturbed map -------------------------------


def _matpow(m, n):
    out = ((1, 0), (0, 1))
    base = tuple(tuple(int(v) for v in row) for row in m)
    for _ in range(n):
        out = (
            (out[0][0] * base[0][0] + out[0][1] * base[1][0], out[0][0] * base[0][1] + out[0][1] * base[1][1]),
            (out[1][0] * base[0][0] + out[1][1] * base[1][0], out[1][0] * base[0][1] + out[1][1] * base[1][1]),
        )
    return out


def fixed_point_determinant(n: int) -> int:
    """det(M^n - I), exact."""
    (a, b), (c, d) = _matpow(CAT_MATRIX, n)
    return (a - 1) * (d - 1) - b * c


def _ext_gcd(a, b):
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, s, t = _ext_gcd(b, a % b)
    return g, t, s - (a // b) * t


class PeriodicPoints(NamedTuple):
    points: list  # list of (Fraction, Fraction)
    count: int  # |det(M^n - I)|, the full count
    truncated: bool

    def as_array(self):
        return np.array([[float(q), float(p)] for q, p in self.points]).reshape(-1, 2)


def periodic_points(n: int, cap: int | None = None) -> PeriodicPoints:
    """All solutions of (M^n - I) x = 0 mod 1, as exact fractions.

    The solutions are A^{-1} m mod 1 for m running over coset
    representatives of Z^2 / A Z^2 (A = M^n - I), read off from the
    lower-triangular Hermite form of A.
    """
    if n < 1:
        raise ValueError("period must be >= 1")
    (a, b), (c, d) = _matpow(CAT_MATRIX, n)
    a -= 1
    d -= 1
    det = a * d - b * c
    if abs(det) > MAX_DET:
        raise OverflowError(f"|det(M^{n} - I)| = {abs(det)} is too large to enumerate")
    g, s, t = _ext_gcd(a, b)
    h11 = g
    h22 = abs(det // g)
    count = abs(det)
    limit = count if cap is None else min(cap, count)
    pts = []
    for i in range(h11):
        if len(pts) >= limit:
            break
        for j in range(h22):
            if len(pts) >= limit:
                break
            # A^{-1} = adj(A) / det, adj = [[d, -b], [-c, a]]
            x = Fraction(d * i - b * j, det) % 1
            y = Fraction(-c * i + a * j, det) % 1
            pts.append((x, y))
    return PeriodicPoints(pts, count, limit < count)


def cat_step_exact(x):
    q, p = x
    return ((2 * q + p) % 1, (3 * q + 2 * p) % 1)


def periodic_orbits(n_max: int):
    """Group all points of period <= n_max into orbits of the unperturbed map.

    Returns a list of orbits, each a list of exact points starting anywhere
    on the orbit; the orbit length is its primitive period.
    """
    seen = set()
    orbits = []
    for n in range(1, n_max + 1):
        for x in periodic_points(n).points:
            if x in seen:
                continue
            orbit = [x]
            seen.add(x)
            y = cat_step_exact(x)
            while y != x:
                orbit.append(y)
                seen.add(y)
                y = cat_step_exact(y)
            orbits.append(orbit)
    return orbits
