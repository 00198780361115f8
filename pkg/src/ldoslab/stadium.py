"""Desymmetrized Bunimovich stadium: geometry, bounce map and semiclassical width.

The quarter stadium occupies x >= 0, 0 <= y <= r, bounded by the top
segment y = r (0 <= x <= a), the quarter circle of radius r centred at
(a, 0), and the two symmetry axes y = 0 and x = 0. The boundary
coordinate q is arclength, counter-clockwise from the origin:

    bottom axis  [0, a + r)
    arc          [a + r, a + r + pi r / 2)
    top segment  [.., 2a + r + pi r / 2)
    left axis    [.., P)

Only the arc and the top segment are deformed when the shape changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import struve

from .semiclassics import WIDTH_FACTOR, DecayParams

AREA = 1.0 + math.pi / 4
GEOM_TOL = 1e-10

BOTTOM, ARC, TOP, LEFT = 0, 1, 2, 3


class GeometryError(RuntimeError):
    pass


@dataclass(frozen=True)
class StadiumShape:
    x: float
    r: float
    a: float

    @property
    def area(self):
        return self.a * self.r + math.pi * self.r**2 / 4

    @property
    def perimeter(self):
        return 2 * self.a + 2 * self.r + math.pi * self.r / 2

    @property
    def breaks(self):
        """Arclength where each piece starts, plus the perimeter."""
        a, r = self.a, self.r
        return np.array([0.0, a + r, a + r + math.pi * r / 2, 2 * a + r + math.pi * r / 2, self.perimeter])

    @property
    def physical_span(self):
        b = self.breaks
        return b[1], b[3]

    def piece(self, q):
        q = np.mod(np.asarray(q, dtype=float), self.perimeter)
        return np.clip(np.searchsorted(self.breaks, q, side="right") - 1, 0, 3)

    def boundary(self, q):
        """Point, outward normal and counter-clockwise tangent at arclength q."""
        q = np.mod(np.asarray(q, dtype=float), self.perimeter)
        a, r = self.a, self.r
        b = self.breaks
        pc = self.piece(q)
        s = q - b[pc]
        phi = np.clip(s / r, 0.0, math.pi / 2)
        X = np.select([pc == BOTTOM, pc == ARC, pc == TOP], [s, a + r * np.cos(phi), a - s], 0.0)
        Y = np.select([pc == BOTTOM, pc == ARC, pc == TOP], [0.0, r * np.sin(phi), r], r - s)
        nx = np.select([pc == BOTTOM, pc == ARC, pc == TOP], [0.0, np.cos(phi), 0.0], -1.0)
        ny = np.select([pc == BOTTOM, pc == ARC, pc == TOP], [-1.0, np.sin(phi), 1.0], 0.0)
        # tangent is the outward normal rotated by +90 degrees
        return X, Y, nx, ny, -ny, nx

    def arclength(self, X, Y, pc):
        a, r = self.a, self.r
        b = self.breaks
        phi = np.clip(np.arctan2(Y, X - a), 0.0, math.pi / 2)
        return np.select(
            [pc == BOTTOM, pc == ARC, pc == TOP],
            [np.clip(X, 0, a + r), b[1] + r * phi, b[2] + np.clip(a - X, 0, a)],
            b[3] + np.clip(r - Y, 0, r),
        )

    def distance_to_physical(self, X, Y):
        """Distance from points to the deformable part of the boundary (arc + top)."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        a, r = self.a, self.r
        dtop = np.hypot(np.clip(X, 0, a) - X, Y - r)
        ang = np.clip(np.arctan2(Y, X - a), 0.0, math.pi / 2)
        darc = np.hypot(X - (a + r * np.cos(ang)), Y - r * np.sin(ang))
        return np.minimum(dtop, darc)


def shape_from_x(x: float) -> StadiumShape:
    """Quarter stadium with a/r = x and area 1 + pi/4."""
    if not x > 0:
        raise ValueError("shape parameter must be positive")
    r = math.sqrt(AREA / (x + math.pi / 4))
    return StadiumShape(float(x), r, x * r)


def normal_displacement(q, x0: float, x1: float):
    """Signed distance along the outward normal of shape x0 to the boundary of shape x1.

    Zero on the symmetry axes. Raises GeometryError when a normal ray
    misses the deformed boundary.
    """
    s0 = shape_from_x(x0)
    q = np.asarray(q, dtype=float)
    if x1 == x0:
        return np.zeros_like(q)
    s1 = shape_from_x(x1)
    X, Y, nx, ny, _, _ = s0.boundary(q)
    pc = s0.piece(q)
    physical = (pc == ARC) | (pc == TOP)

    with np.errstate(divide="ignore", invalid="ignore"):
        zl = np.where(np.abs(ny) > 1e-15, (s1.r - Y) / ny, np.nan)
        xl = X + zl * nx
        zl = np.where((xl >= -GEOM_TOL) & (xl <= s1.a + GEOM_TOL), zl, np.nan)

        dx, dy = X - s1.a, Y
        bb = dx * nx + dy * ny
        disc = bb * bb - (dx * dx + dy * dy - s1.r**2)
        root = np.sqrt(np.where(disc >= 0, disc, np.nan))
        cands = [zl]
        for zc in (-bb - root, -bb + root):
            xc = X + zc * nx
            yc = Y + zc * ny
            cands.append(np.where((xc >= s1.a - GEOM_TOL) & (yc >= -GEOM_TOL), zc, np.nan))
    c = np.stack(cands)
    absc = np.where(np.isnan(c), np.inf, np.abs(c))
    best = np.take_along_axis(c, np.argmin(absc, axis=0)[None], axis=0)[0]
    missing = physical & np.isnan(best)
    if np.any(missing):
        bad = np.atleast_1d(q)[np.atleast_1d(missing)][0]
        raise GeometryError(f"normal ray at q={bad:.12g} misses the deformed boundary")
    return np.where(physical, best, 0.0)


@dataclass(frozen=True)
class CollisionState:
    q: float
    p_t: float


def action_diff_billiard(q, p_t, x0: float, delta_x: float, p_mag: float):
    """Action difference 2 |p| z(q) cos(theta) with p_t = sin(theta)."""
    if not p_mag > 0:
        raise ValueError("p_mag must be positive")
    z = normal_displacement(q, x0, x0 + delta_x)
    return 2.0 * p_mag * z * np.sqrt(np.clip(1.0 - np.asarray(p_t, dtype=float) ** 2, 0.0, None))


def mean_bounce_time(shape: StadiumShape, p_mag: float, m: float) -> float:
    return m * math.pi * shape.area / (p_mag * shape.perimeter)


def _angle_deficit(c):
    # 1 - Re <exp(-i c cos(theta))> over p_t = sin(theta) uniform in (-1, 1)
    return 0.5 * math.pi * struve(1, np.abs(c))


def gamma_stadium(x0: float, delta_x: float, p_mag: float = 200.0, m: float = 0.5, hbar: float = 1.0, epsrel: float = 1e-8) -> DecayParams:
    """Decay rate for a boundary deformation x0 -> x0 + delta_x.

    The Birkhoff average over p_t is done analytically (Struve function),
    leaving one adaptive integral over the deformable boundary; the axes
    contribute zero deficit.
    """
    if not (p_mag > 0 and m > 0):
        raise ValueError("p_mag and m must be positive")
    shape = shape_from_x(x0)
    P = shape.perimeter
    tau = mean_bounce_time(shape, p_mag, m)
    eta = 1.0 / tau
    if delta_x == 0.0:
        return DecayParams(0.0, eta, 2 * P, tau, 2 * P)

    def f(q):
        z = normal_displacement(np.array([q]), x0, x0 + delta_x)[0]
        return _angle_deficit(2.0 * p_mag * z / hbar)

    b = shape.breaks
    total = 0.0
    for lo, hi in ((b[1], b[2]), (b[2], b[3])):
        val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=400)
        total += val
    # alpha and the section area are both the full Birkhoff rectangle, 2P
    return DecayParams(eta * total / P, eta, 2 * P, tau, 2 * P)


def sigma_sc_stadium(params) -> float:
    g = getattr(params, "gamma", params)
    if g < 0:
        raise ValueError("gamma must be non-negative")
    return WIDTH_FACTOR * g


# --- bounce map ------------------------------------------------------------------


def collision_map(q, p_t, shape: StadiumShape):
    """Next boundary collision for arrays of Birkhoff states.

    Returns (q_next, p_t_next, chord_length). The symmetry axes reflect
    specularly like the physical walls.
    """
    q = np.asarray(q, dtype=float)
    p_t = np.asarray(p_t, dtype=float)
    if np.any(np.abs(p_t) >= 1.0):
        raise ValueError("tangential launch |p_t| = 1 is degenerate")
    a, r = shape.a, shape.r
    X, Y, nx, ny, tx, ty = shape.boundary(q)
    cn = np.sqrt(1.0 - p_t**2)
    vx = p_t * tx - cn * nx
    vy = p_t * ty - cn * ny

    eps = 1e-12
    inf = np.full_like(X, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_bot = np.where(vy < 0, -Y / vy, inf)
        t_bot = np.where((t_bot > eps) & (X + t_bot * vx <= a + r + GEOM_TOL), t_bot, inf)
        t_left = np.where(vx < 0, -X / vx, inf)
        t_left = np.where((t_left > eps) & (Y + t_left * vy <= r + GEOM_TOL), t_left, inf)
        t_top = np.where(vy > 0, (r - Y) / vy, inf)
        t_top = np.where((t_top > eps) & (X + t_top * vx <= a + GEOM_TOL), t_top, inf)
        dx = X - a
        bb = dx * vx + Y * vy
        cc = dx * dx + Y * Y - r * r
        disc = bb * bb - cc
        root = np.sqrt(np.where(disc >= 0, disc, np.nan))
        t_arc = inf
        for tc in (-bb + root, -bb - root):
            ok = (tc > 1e-9) & (X + tc * vx >= a - GEOM_TOL) & (Y + tc * vy >= -GEOM_TOL)
            t_arc = np.minimum(t_arc, np.where(ok, tc, inf))

    T = np.stack([t_bot, t_arc, t_top, t_left])
    pc = np.argmin(T, axis=0)
    t = np.take_along_axis(T, pc[None], axis=0)[0]
    if not np.all(np.isfinite(t)):
        raise GeometryError("trajectory failed to hit the boundary")
    Xn = X + t * vx
    Yn = Y + t * vy
    qn = shape.arclength(Xn, Yn, pc)
    _, _, mx, my, sx, sy = shape.boundary(qn)
    dot = vx * mx + vy * my
    wx = vx - 2 * dot * mx
    wy = vy - 2 * dot * my
    pn = np.clip(wx * sx + wy * sy, -1 + 1e-15, 1 - 1e-15)
    return qn, pn, t


def mean_free_path_mc(shape: StadiumShape, collisions: int = 10**6, walkers: int = 10**4, seed: int = 0):
    """Average chord over ``collisions`` bounces started from the invariant measure."""
    rng = np.random.default_rng(seed)
    q = rng.random(walkers) * shape.perimeter
    p = rng.uniform(-1.0, 1.0, walkers)
    steps = max(1, collisions // walkers)
    total = 0.0
    sq = 0.0
    for _ in range(steps):
        q, p, chord = collision_map(q, p, shape)
        total += chord.sum()
        sq += np.sum(chord**2)
    n = steps * walkers
    mean = total / n
    return mean, math.sqrt(max(sq / n - mean**2, 0.0) / n)
