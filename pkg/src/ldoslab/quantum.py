"""Quantized perturbed cat map, eigenphases and the LDOS of overlaps.

Hilbert space of dimension N with 2 pi hbar = 1/N; position basis
q_j = (j + q_offset) / N. The propagator is

    U = K_W . K_V . U_cat

with U_cat the torus quantization of [[2, 1], [3, 2]],
K_V = diag(exp(-2 pi i N V(q_j))) the momentum kick and K_W the position
kick, diagonal in the momentum basis.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .distributions import WeightedCircularSample, wrap_angle
from .maps import TWO_SHEAR, PerturbationSpec, kick_potential, position_kick_potential


class QuantizationError(RuntimeError):
    pass


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuantizationKnobs:
    # lattice offset for the kick sampling points; 0 means q_j = j/N
    q_offset: float = 0.0

    def canonical(self):
        return {"q_offset": float(self.q_offset)}


@dataclass(frozen=True, eq=False)
class UnitaryPropagator:
    N: int
    matrix: np.ndarray
    spec: PerturbationSpec
    knobs: QuantizationKnobs = field(default_factory=QuantizationKnobs)

    @property
    def k(self):
        return self.spec.k


@dataclass(frozen=True, eq=False)
class EigenSystem:
    phases: np.ndarray  # sorted ascending in [-pi, pi)
    vectors: np.ndarray  # orthonormal columns

    @property
    def N(self):
        return len(self.phases)


def unitarity_residual(U):
    N = U.shape[0]
    return float(np.max(np.abs(U.conj().T @ U - np.eye(N))))


def cat_propagator(N: int) -> np.ndarray:
    """(U_cat)_{jl} = (iN)^{-1/2} exp[(2 pi i / N)(l^2 - j l + j^2)]."""
    j = np.arange(N)[:, None]
    l = np.arange(N)[None, :]
    # reduce the integer exponent mod N before going to floats
    expo = np.mod(l * l - j * l + j * j, N)
    return np.exp(2j * np.pi * expo / N) / np.sqrt(1j * N)


def momentum_kick_diagonal(N, spec, knobs=QuantizationKnobs()):
    q = (np.arange(N) + knobs.q_offset) / N
    return np.exp(-2j * np.pi * N * kick_potential(q, spec))


def position_kick_matrix(N, spec):
    p = np.arange(N) / N
    F = np.fft.fft(np.eye(N), norm="ortho")  # F_{lj} = exp(-2 pi i l j / N) / sqrt(N)
    d = np.exp(-2j * np.pi * N * position_kick_potential(p, spec))
    return F.conj().T @ (d[:, None] * F)


def build_propagator(N: int, spec: PerturbationSpec, knobs: QuantizationKnobs = QuantizationKnobs()) -> UnitaryPropagator:
    if N < 2:
        raise ValueError("N must be >= 2")
    U = momentum_kick_diagonal(N, spec, knobs)[:, None] * cat_propagator(N)
    if spec.kind == TWO_SHEAR and spec.k != 0.0:
        U = position_kick_matrix(N, spec) @ U
    res = unitarity_residual(U)
    if res > 1e-10 * np.sqrt(N):
        raise QuantizationError(f"propagator not unitary: residual {res:.3e}")
    return UnitaryPropagator(N, U, spec, knobs)


def _wrapped_sorted(phases, vectors):
    phases = wrap_angle(phases)
    order = np.argsort(phases, kind="stable")
    return EigenSystem(phases[order], np.ascontiguousarray(vectors[:, order]))


def _hermitian_fallback(U):
    # (U + U^+)/2 and (U - U^+)/2i commute for normal U; a generic real
    # combination shares U's eigenvectors
    c = 0.6180339887498949
    H = 0.5 * (U + U.conj().T) + c * (U - U.conj().T) / 2j
    _, V = np.linalg.eigh(H)
    lam = np.einsum("ij,ij->j", V.conj(), U @ V)
    return np.angle(lam), V


def eigen_residuals(U, es: EigenSystem):
    V = es.vectors
    r = np.max(np.linalg.norm(U @ V - V * np.exp(1j * es.phases)[None, :], axis=0))
    o = np.max(np.abs(V.conj().T @ V - np.eye(V.shape[1])))
    return float(r), float(o)


def eigendecompose(U, tol: float = 1e-9) -> EigenSystem:
    """Eigenphases and orthonormal eigenvectors of a unitary matrix.

    Uses the complex Schur form, which is diagonal for normal matrices and
    yields orthonormal vectors even inside degenerate eigenspaces.
    """
    M = U.matrix if isinstance(U, UnitaryPropagator) else np.asarray(U)
    T, Z = scipy.linalg.schur(M, output="complex")
    es = _wrapped_sorted(np.angle(np.diag(T)), Z)
    r, o = eigen_residuals(M, es)
    if r <= tol and o <= tol:
        return es
    es = _wrapped_sorted(*_hermitian_fallback(M))
    r, o = eigen_residuals(M, es)
    if r > tol or o > tol:
        raise EigenSolverError(f"eigendecomposition failed: residual {r:.2e}, orthogonality {o:.2e}")
    return es


@dataclass(frozen=True, eq=False)
class OverlapDistribution:
    """Overlaps |<j(k+dk)|i(k)>|^2 at phase differences theta_j - theta_i.

    Arrays are indexed [j, i]: rows are perturbed states, columns the
    unperturbed states being averaged over.
    """

    omega: np.ndarray
    weights: np.ndarray
    n_states: int

    def sample(self) -> WeightedCircularSample:
        return WeightedCircularSample(self.omega.ravel(), self.weights.ravel())

    def per_state_sums(self):
        return self.weights.sum(axis=0)


def ldos(E0: EigenSystem, E1: EigenSystem) -> OverlapDistribution:
    if E0.N != E1.N:
        raise ValueError(f"dimension mismatch: {E0.N} vs {E1.N}")
    W = np.abs(E1.vectors.conj().T @ E0.vectors) ** 2
    omega = wrap_angle(E1.phases[:, None] - E0.phases[None, :])
    return OverlapDistribution(omega, W, E0.N)


def survival_amplitude_per_state(dist: OverlapDistribution, m_max: int):
    """Amplitude fidelity of each unperturbed state, shape (m_max + 1, n)."""
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    m = np.arange(m_max + 1)[:, None, None]
    return np.sum(dist.weights[None] * np.exp(-1j * dist.omega[None] * m), axis=1)


def survival_amplitude(dist: OverlapDistribution, m_max: int) -> np.ndarray:
    """State-averaged amplitude (1/n) sum_ij w_ij exp(-i omega_ij m), m = 0..m_max."""
    return survival_amplitude_per_state(dist, m_max).sum(axis=1) / dist.n_states


# --- eigensystem cache ----------------------------------------------------------

CACHE_MAGIC = b"LDOSEIG\x00"
CACHE_VERSION = 1
# magic, version, N, k, spec hash, body length, body sha256
_HEADER = struct.Struct("<8sIQd32sQ32s")


class CacheError(RuntimeError):
    pass


def spec_hash(spec: PerturbationSpec, knobs: QuantizationKnobs = QuantizationKnobs()) -> bytes:
    payload = json.dumps({"spec": spec.canonical(), "knobs": knobs.canonical()}, sort_keys=True)
    return hashlib.sha256(payload.encode()).digest()


def cache_key(N: int, spec: PerturbationSpec, knobs: QuantizationKnobs = QuantizationKnobs()) -> str:
    payload = json.dumps(
        {"N": int(N), "k": float(spec.k).hex(), "spec": spec.canonical(), "knobs": knobs.canonical()},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def encode_eigensystem(es: EigenSystem, k: float, shash: bytes) -> bytes:
    body = es.phases.astype("<f8").tobytes() + np.asfortranarray(es.vectors).astype("<c16").tobytes(order="F")
    header = _HEADER.pack(CACHE_MAGIC, CACHE_VERSION, es.N, float(k), shash, len(body), hashlib.sha256(body).digest())
    return header + body


def decode_eigensystem(blob: bytes):
    """Returns (EigenSystem, k, spec_hash); raises CacheError on any inconsistency."""
    if len(blob) < _HEADER.size:
        raise CacheError("truncated header")
    magic, version, N, k, shash, blen, digest = _HEADER.unpack_from(blob)
    if magic != CACHE_MAGIC:
        raise CacheError("bad magic")
    if version != CACHE_VERSION:
        raise CacheError(f"unsupported version {version}")
    body = blob[_HEADER.size:]
    if len(body) != blen or blen != N * 8 + N * N * 16:
        raise CacheError("body length mismatch")
    if hashlib.sha256(body).digest() != digest:
        raise CacheError("checksum mismatch")
    phases = np.frombuffer(body[: N * 8], dtype="<f8").copy()
    vecs = np.frombuffer(body[N * 8:], dtype="<c16").reshape((N, N), order="F").copy()
    return EigenSystem(phases, vecs), k, shash


class EigenCache:
    """Directory of eigensystem files keyed by (N, k, spec, knobs)."""

    def __init__(self, root):
        self.root = os.fspath(root)
        os.makedirs(self.root, exist_ok=True)

    def path(self, N, spec, knobs=QuantizationKnobs()):
        return os.path.join(self.root, cache_key(N, spec, knobs) + ".eig")

    def load(self, N, spec, knobs=QuantizationKnobs()):
        path = self.path(N, spec, knobs)
        if not os.path.exists(path):
            return None
        with open(path, "rb") as fh:
            blob = fh.read()
        es, k, shash = decode_eigensystem(blob)
        if es.N != N or k != spec.k or shash != spec_hash(spec, knobs):
            raise CacheError("cache entry does not match its key")
        return es

    def store(self, es, N, spec, knobs=QuantizationKnobs()):
        path = self.path(N, spec, knobs)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".part")
        with os.fdopen(fd, "wb") as fh:
            fh.write(encode_eigensystem(es, spec.k, spec_hash(spec, knobs)))
        os.replace(tmp, path)
