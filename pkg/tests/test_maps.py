import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ldoslab import maps
from ldoslab.maps import EffectivePlanck, PerturbationSpec, TorusPoint

unit = st.floats(0.0, 1.0, exclude_max=True, allow_nan=False)
strength = st.floats(-0.3, 0.3, allow_nan=False)


def test_shear_examples():
    g = PerturbationSpec(k=1.0)
    assert maps.shear_momentum(0.0, g) == pytest.approx(0.0, abs=1e-15)
    assert maps.shear_momentum(0.5, g) == pytest.approx(-1 / math.pi, rel=1e-12)
    assert maps.kick_potential(0.25, g) == pytest.approx(-1 / (4 * math.pi**2), rel=1e-12)


def test_potential_generates_shear():
    # -dV/dq = eps, checked by central differences
    h = 1e-6
    q = np.linspace(0.05, 0.95, 37)
    specs = [
        PerturbationSpec(k=0.7),
        PerturbationSpec(k=0.7, window="local", q0=0.01, beta=0.4),
        PerturbationSpec(k=0.7, window="local", q0=0.2, beta=0.5, window_mode="truncated"),
    ]
    for s in specs:
        q_in = q[(q > s.q0 + 2 * h) & (q < s.q1 - 2 * h)] if s.window == "local" else q
        dv = (maps.kick_potential(q_in + h, s) - maps.kick_potential(q_in - h, s)) / (2 * h)
        np.testing.assert_allclose(-dv, maps.shear_momentum(q_in, s), atol=1e-8)
    two = PerturbationSpec(kind=maps.TWO_SHEAR, k=0.7)
    dw = (maps.position_kick_potential(q + h, two) - maps.position_kick_potential(q - h, two)) / (2 * h)
    np.testing.assert_allclose(dw, maps.shear_position(q, two), atol=1e-8)


def test_rescaled_window_is_smooth_at_edges():
    s = PerturbationSpec(k=1.0, window="local", q0=0.1, beta=0.3)
    for edge in (s.q0, s.q1):
        assert maps.shear_momentum(edge, s) == pytest.approx(0.0, abs=1e-14)
        assert maps.kick_potential(edge, s) == pytest.approx(0.0, abs=1e-14)
    assert maps.shear_momentum(0.5, s) == 0.0


def test_truncated_windows_tile_global():
    q = np.linspace(0, 1, 101, endpoint=False)
    left = PerturbationSpec(k=0.4, window="local", q0=0.0, beta=0.3, window_mode="truncated")
    right = PerturbationSpec(k=0.4, window="local", q0=0.3, beta=0.7, window_mode="truncated")
    # the point q = 0.3 sits in both closed windows; drop it
    mask = ~np.isclose(q, 0.3)
    total = maps.kick_potential(q, left) + maps.kick_potential(q, right)
    np.testing.assert_allclose(total[mask], maps.kick_potential(q, PerturbationSpec(k=0.4))[mask], atol=1e-15)


def test_unperturbed_fixed_point_and_inverse():
    assert maps.evolve_point(TorusPoint(0.0, 0.0)) == TorusPoint(0.0, 0.0)
    q, p = maps.cat_step(0.5, 0.5)
    assert (float(q), float(p)) == (0.5, 0.5)
    # M^{-1} = [[2, -1], [-3, 2]]
    rng = np.random.default_rng(0)
    q, p = rng.random(100), rng.random(100)
    q1, p1 = maps.cat_step(q, p)
    qb, pb = maps.wrap(2 * q1 - p1), maps.wrap(-3 * q1 + 2 * p1)
    d = np.abs(np.stack([qb - q, pb - p]))
    assert np.all(np.minimum(d, 1 - d) < 1e-12)


def test_zero_strength_matches_cat_step():
    rng = np.random.default_rng(1)
    q, p = rng.random(50), rng.random(50)
    for s in (PerturbationSpec(), PerturbationSpec(kind=maps.TWO_SHEAR), PerturbationSpec(window="local", q0=0.1, beta=0.2)):
        np.testing.assert_array_equal(maps.evolve(q, p, s), maps.cat_step(q, p))


def test_invalid_specs():
    with pytest.raises(ValueError):
        PerturbationSpec(window="local", q0=0.5, beta=0.7)
    with pytest.raises(ValueError):
        PerturbationSpec(kind="bogus")
    with pytest.raises(ValueError):
        PerturbationSpec(kind=maps.TWO_SHEAR, window="local", q0=0.0, beta=0.5)
    with pytest.raises(ValueError):
        EffectivePlanck(0)
    assert EffectivePlanck(100).hbar == pytest.approx(1 / (200 * math.pi))


def _jacobian(q, p, spec, h=1e-6):
    def f(x, y):
        a, b = maps.evolve(x, y, spec)
        return np.array([float(a), float(b)])

    base = f(q, p)
    cols = []
    for dq, dp in ((h, 0.0), (0.0, h)):
        d = f(q + dq, p + dp) - base
        d = (d + 0.5) % 1.0 - 0.5  # undo wrap jumps
        cols.append(d / h)
    return np.array(cols).T


@given(unit, unit, strength, st.booleans())
def test_area_preserving(q, p, k, two):
    spec = PerturbationSpec(kind=maps.TWO_SHEAR if two else maps.MOMENTUM_SHEAR, k=k)
    assert np.linalg.det(_jacobian(q, p, spec)) == pytest.approx(1.0, abs=1e-4)


@given(unit, unit, strength)
def test_full_window_local_equals_global(q, p, k):
    loc = PerturbationSpec(k=k, window="local", q0=0.0, beta=1.0)
    glob = PerturbationSpec(k=k)
    a = np.array(maps.evolve(q, p, loc))
    b = np.array(maps.evolve(q, p, glob))
    d = np.abs(a - b)
    assert np.all(np.minimum(d, 1 - d) < 1e-12)


@given(unit, unit, strength, strength)
def test_action_diff_linear_in_delta(q, p, dk1, dk2):
    s = PerturbationSpec(kind=maps.TWO_SHEAR, k=0.1)
    a = maps.action_diff_one_step(q, p, dk1, s) + maps.action_diff_one_step(q, p, dk2, s)
    assert a == pytest.approx(maps.action_diff_one_step(q, p, dk1 + dk2, s), abs=1e-14)


def test_action_diff_example():
    s = PerturbationSpec()
    assert maps.action_diff_one_step(0.25, 0.0, 1.0, s) == pytest.approx(1 / (4 * math.pi**2), rel=1e-12)
    assert maps.action_diff_one_step(0.25, 0.0, 0.0, s) == 0.0


def test_evolve_with_action_agrees_with_evolve():
    rng = np.random.default_rng(2)
    q, p = rng.random(200), rng.random(200)
    for s in (PerturbationSpec(k=0.2), PerturbationSpec(kind=maps.TWO_SHEAR, k=0.2)):
        q1, p1, ds = maps.evolve_with_action(q, p, s, 0.05)
        np.testing.assert_array_equal(np.array(maps.evolve(q, p, s)), np.array([q1, p1]))
        qc, pc = maps.cat_step(q, p)
        p_kick = maps.wrap(pc + maps.shear_momentum(qc, s))
        np.testing.assert_allclose(ds, maps.action_diff_one_step(qc, p_kick, 0.05, s), atol=1e-15)


# --- periodic points ----------------------------------------------------------------


def test_period_one_and_two_counts():
    p1 = maps.periodic_points(1)
    assert p1.count == 2
    assert sorted(p1.points) == [(Fraction(0), Fraction(0)), (Fraction(1, 2), Fraction(1, 2))]
    p2 = maps.periodic_points(2)
    assert p2.count == abs(maps.fixed_point_determinant(2)) == 12
    assert len(set(p2.points)) == 12


def _brute_periodic(n):
    # every solution has denominator dividing |det|; scan that lattice
    D = abs(maps.fixed_point_determinant(n))
    (a, b), (c, d) = maps._matpow(maps.CAT_MATRIX, n)
    found = set()
    for i in range(D):
        for j in range(D):
            if ((a - 1) * i + b * j) % D == 0 and (c * i + (d - 1) * j) % D == 0:
                found.add((Fraction(i, D), Fraction(j, D)))
    return found


@pytest.mark.parametrize("n", [1, 2, 3])
def test_periodic_points_match_grid_scan(n):
    assert set(maps.periodic_points(n).points) == _brute_periodic(n)


@pytest.mark.parametrize("n", range(1, 8))
def test_periodic_points_close(n):
    for x in maps.periodic_points(n).points:
        y = x
        for _ in range(n):
            y = maps.cat_step_exact(y)
        assert y == x


@pytest.mark.parametrize("n", range(1, 9))
def test_orbit_counts_satisfy_divisor_identity(n):
    orbits = maps.periodic_orbits(n)
    by_period = {}
    for o in orbits:
        by_period[len(o)] = by_period.get(len(o), 0) + 1
    total = sum(d * by_period.get(d, 0) for d in range(1, n + 1) if n % d == 0)
    assert total == abs(maps.fixed_point_determinant(n))


def test_periodic_points_cap_and_overflow():
    r = maps.periodic_points(5, cap=10)
    assert len(r.points) == 10 and r.truncated and r.count == abs(maps.fixed_point_determinant(5))
    with pytest.raises(OverflowError):
        maps.periodic_points(40)
    with pytest.raises(ValueError):
        maps.periodic_points(0)
