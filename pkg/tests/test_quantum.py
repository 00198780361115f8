import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ldoslab import maps, quantum
from ldoslab.maps import PerturbationSpec

GLOBAL = PerturbationSpec()


def _U(N, spec=GLOBAL):
    return quantum.build_propagator(N, spec).matrix


def test_cat_propagator_small_n():
    U = quantum.cat_propagator(2)
    np.testing.assert_allclose(np.abs(U), 1 / math.sqrt(2))
    assert quantum.unitarity_residual(U) < 1e-14


@pytest.mark.parametrize("spec", [GLOBAL, PerturbationSpec(k=0.3), PerturbationSpec(kind=maps.TWO_SHEAR, k=0.3),
                                  PerturbationSpec(k=0.3, window="local", q0=0.2, beta=0.5, window_mode="truncated")])
def test_propagators_unitary(spec):
    assert quantum.unitarity_residual(_U(64, spec)) < 1e-12


def test_build_propagator_rejects_tiny_n():
    with pytest.raises(ValueError):
        quantum.build_propagator(1, GLOBAL)


def _coherent(N, q0, p0):
    x = np.arange(N) / N
    psi = sum(np.exp(-math.pi * N * (x - q0 + n) ** 2 + 2j * math.pi * N * p0 * (x - q0 + n)) for n in range(-4, 5))
    return psi / np.linalg.norm(psi)


@pytest.mark.parametrize("spec", [PerturbationSpec(k=0.05), PerturbationSpec(kind=maps.TWO_SHEAR, k=0.05)])
def test_egorov_one_step(spec):
    # a minimal-uncertainty packet follows the classical map to O(hbar)
    N = 128
    q0, p0 = 0.31, 0.57
    phi = _U(N, spec) @ _coherent(N, q0, p0)
    q_quant = np.vdot(phi, np.exp(2j * np.pi * np.arange(N) / N) * phi)
    p_quant = np.vdot(phi, np.roll(phi, -1))

    x, w = np.polynomial.hermite_e.hermegauss(40)
    s = math.sqrt(1 / (4 * math.pi * N))
    W = np.outer(w, w) / w.sum() ** 2
    q1, p1 = maps.evolve(q0 + s * x[:, None], p0 + s * x[None, :], spec)
    q_class = np.sum(W * np.exp(2j * np.pi * q1))
    p_class = np.sum(W * np.exp(2j * np.pi * p1))
    assert abs(q_quant - q_class) < 1e-3
    assert abs(p_quant - p_class) < 1e-3


def test_eigendecompose_residuals_and_moduli():
    U = _U(96, PerturbationSpec(k=0.2))
    es = quantum.eigendecompose(U)
    assert np.max(quantum.eigen_residuals(U, es)) < 1e-9
    np.testing.assert_allclose(es.vectors.conj().T @ es.vectors, np.eye(96), atol=1e-10)
    assert np.all(np.diff(es.phases) >= 0)
    assert np.all((es.phases >= -np.pi) & (es.phases < np.pi))


def test_degenerate_spectrum_still_orthonormal():
    # the bare cat map has highly degenerate eigenphases
    U = quantum.cat_propagator(60)
    es = quantum.eigendecompose(U)
    np.testing.assert_allclose(es.vectors.conj().T @ es.vectors, np.eye(60), atol=1e-10)
    assert np.max(quantum.eigen_residuals(U, es)) < 1e-9


def test_trace_identity():
    U = _U(64, PerturbationSpec(k=0.1))
    es = quantum.eigendecompose(U)
    assert np.sum(np.exp(1j * es.phases)) == pytest.approx(np.trace(U), abs=1e-10)


def _brute_ldos(U0, U1):
    w0, v0 = np.linalg.eig(U0)
    w1, v1 = np.linalg.eig(U1)
    n = len(w0)
    pairs = []
    for i in range(n):
        for j in range(n):
            ov = abs(np.vdot(v1[:, j] / np.linalg.norm(v1[:, j]), v0[:, i] / np.linalg.norm(v0[:, i]))) ** 2
            pairs.append((np.angle(w1[j] / w0[i]), ov))
    return pairs


def test_ldos_matches_double_loop_at_n4():
    U0 = _U(4, PerturbationSpec(k=0.1))
    U1 = _U(4, PerturbationSpec(k=0.6))
    d = quantum.ldos(quantum.eigendecompose(U0), quantum.eigendecompose(U1))
    brute = _brute_ldos(U0, U1)
    ours = sorted(zip(np.round(d.omega.ravel(), 9), np.round(d.weights.ravel(), 9)))
    ref = sorted((round(float(np.mod(a + np.pi, 2 * np.pi) - np.pi), 9), round(w, 9)) for a, w in brute)
    np.testing.assert_allclose(np.array(ours), np.array(ref), atol=1e-8)


def test_zero_perturbation_ldos_is_delta():
    es = quantum.eigendecompose(_U(50, PerturbationSpec(k=0.1)))
    d = quantum.ldos(es, es)
    np.testing.assert_allclose(d.weights, np.eye(50), atol=1e-12)
    np.testing.assert_allclose(quantum.survival_amplitude(d, 3), 1.0, atol=1e-12)


@given(st.floats(0.0, 1.0))
def test_overlaps_doubly_stochastic(dk):
    E0 = quantum.eigendecompose(_U(32))
    E1 = quantum.eigendecompose(_U(32, PerturbationSpec(k=dk)))
    W = quantum.ldos(E0, E1).weights
    np.testing.assert_allclose(W.sum(axis=0), 1.0, atol=1e-10)
    np.testing.assert_allclose(W.sum(axis=1), 1.0, atol=1e-10)


def test_survival_amplitude_is_fidelity_trace():
    # (1/N) Tr(U1^-m U0^m), computed by matrix powers
    N = 64
    U0, U1 = _U(N), _U(N, PerturbationSpec(k=0.1))
    d = quantum.ldos(quantum.eigendecompose(U0), quantum.eigendecompose(U1))
    amp = quantum.survival_amplitude(d, 4)
    for m in range(5):
        tr = np.trace(np.linalg.matrix_power(U1.conj().T, m) @ np.linalg.matrix_power(U0, m)) / N
        assert abs(amp[m] - tr) < 1e-12


def test_ldos_dimension_mismatch():
    with pytest.raises(ValueError):
        quantum.ldos(quantum.eigendecompose(_U(8)), quantum.eigendecompose(_U(9)))


def test_width_symmetric_under_sign_flip():
    from ldoslab import distributions as dist

    N = 120
    E0 = quantum.eigendecompose(_U(N))
    w = [dist.width_70(quantum.ldos(E0, quantum.eigendecompose(_U(N, PerturbationSpec(k=s * 20 / N)))).sample()) for s in (1, -1)]
    # level spacing sets the scatter
    assert abs(w[0] - w[1]) < 4 * 2 * math.pi / N


# --- cache --------------------------------------------------------------------


def test_cache_round_trip(tmp_path):
    spec = PerturbationSpec(k=0.1)
    es = quantum.eigendecompose(_U(20, spec))
    cache = quantum.EigenCache(tmp_path)
    assert cache.load(20, spec) is None
    cache.store(es, 20, spec)
    back = cache.load(20, spec)
    np.testing.assert_array_equal(back.phases, es.phases)
    np.testing.assert_array_equal(back.vectors, es.vectors)
    assert not list(tmp_path.glob("*.part"))


def test_cache_keys_distinguish_specs():
    a = quantum.cache_key(20, PerturbationSpec(k=0.1))
    assert a != quantum.cache_key(20, PerturbationSpec(k=0.1 + 1e-16 * 8))
    assert a != quantum.cache_key(21, PerturbationSpec(k=0.1))
    assert a != quantum.cache_key(20, PerturbationSpec(k=0.1), quantum.QuantizationKnobs(q_offset=0.5))
    assert a != quantum.cache_key(20, PerturbationSpec(k=0.1, window="local", q0=0.0, beta=1.0))


@pytest.mark.parametrize("damage", ["flip", "truncate", "magic"])
def test_cache_detects_corruption(tmp_path, damage):
    spec = PerturbationSpec(k=0.2)
    cache = quantum.EigenCache(tmp_path)
    cache.store(quantum.eigendecompose(_U(12, spec)), 12, spec)
    path = cache.path(12, spec)
    blob = bytearray(open(path, "rb").read())
    if damage == "flip":
        blob[-5] ^= 0xFF
    elif damage == "truncate":
        blob = blob[: len(blob) // 2]
    else:
        blob[0:8] = b"XXXXXXXX"
    open(path, "wb").write(bytes(blob))
    with pytest.raises(quantum.CacheError):
        cache.load(12, spec)


def test_cache_rejects_mismatched_entry(tmp_path):
    cache = quantum.EigenCache(tmp_path)
    a, b = PerturbationSpec(k=0.1), PerturbationSpec(k=0.2)
    cache.store(quantum.eigendecompose(_U(10, a)), 10, a)
    # an entry copied under the wrong key is refused
    import shutil

    shutil.copy(cache.path(10, a), cache.path(10, b))
    with pytest.raises(quantum.CacheError):
        cache.load(10, b)
