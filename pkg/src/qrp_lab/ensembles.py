"""Deterministic, seeded sampling of reservoir dynamics.

Reservoir variants: a global Haar-random unitary, a brickwork circuit of
2-local Haar blocks, chaotic Ising evolution, and a noise-interleaved stack
of brickwork layers.  All sampling is keyed by a ``SeedPath`` so identical
paths reproduce bit-identical matrices and distinct paths give independent
streams (counter-based Philox generator underneath).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import List, Union

import numpy as np

from .channels import PauliNoise, SingleQubitChannel, apply_superop_mat
from .linalg import (
    MAX_QUBITS,
    PAULI_X,
    PAULI_Z,
    DensityMatrix,
    herm_exp,
    kron,
    single_qubit_op,
)


@dataclass(frozen=True)
class SeedPath:
    """Hierarchical RNG key: (master_seed, sample_index, stream_tag)."""

    master_seed: int
    sample_index: int = 0
    stream_tag: str = "main"

    def __post_init__(self):
        if self.master_seed < 0 or self.sample_index < 0:
            raise ValueError("seed components must be non-negative")

    def rng(self) -> np.random.Generator:
        tag_digest = hashlib.blake2b(self.stream_tag.encode(), digest_size=8).digest()
        tag_int = int.from_bytes(tag_digest, "little")
        ss = np.random.SeedSequence([self.master_seed, self.sample_index, tag_int])
        return np.random.Generator(np.random.Philox(ss))

    def derive(self, *parts) -> "SeedPath":
        """Child path with the tag extended by the given parts."""
        tag = "/".join([self.stream_tag, *map(str, parts)])
        return SeedPath(self.master_seed, self.sample_index, tag)

    def indexed(self, sample_index: int) -> "SeedPath":
        return SeedPath(self.master_seed, sample_index, self.stream_tag)


def _check_register(n_a: int, n_h: int):
    if n_a < 1 or n_h < 1:
        raise ValueError("need at least one accessible and one hidden qubit")
    if n_a + n_h > MAX_QUBITS:
        raise ValueError(f"register of {n_a + n_h} qubits exceeds cap {MAX_QUBITS}")


@dataclass(frozen=True)
class HaarGlobal:
    """One Haar-random unitary on the full register, fixed for the whole run."""

    n_a: int
    n_h: int

    def __post_init__(self):
        _check_register(self.n_a, self.n_h)


@dataclass(frozen=True)
class AlternatingLayered:
    """Brickwork circuit: layers of independent Haar 2-local blocks."""

    n_a: int
    n_h: int
    layers: int

    def __post_init__(self):
        _check_register(self.n_a, self.n_h)
        if self.layers < 1:
            raise ValueError("need at least one layer")


@dataclass(frozen=True)
class Ising:
    """Open-chain evolution exp(-i dt H) with ZZ coupling and X/Z fields."""

    n_a: int
    n_h: int
    coupling: float
    field_x: float
    field_z: float
    dt: float

    def __post_init__(self):
        _check_register(self.n_a, self.n_h)


@dataclass(frozen=True)
class NoiseInterleaved:
    """Brickwork layers with a local channel applied to every qubit between them.

    ``placement="pre"`` inserts the noise before each unitary layer (so the
    step reads layer_L o noise o ... o layer_1 o noise); ``"post"`` inserts it
    after each layer instead.
    """

    inner: AlternatingLayered
    noise: Union[PauliNoise, SingleQubitChannel]
    placement: str = "pre"

    def __post_init__(self):
        if self.placement not in ("pre", "post"):
            raise ValueError("placement must be 'pre' or 'post'")

    @property
    def n_a(self) -> int:
        return self.inner.n_a

    @property
    def n_h(self) -> int:
        return self.inner.n_h


ReservoirSpec = Union[HaarGlobal, AlternatingLayered, Ising, NoiseInterleaved]


def haar_pure_density(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """Haar-random pure state as a density matrix."""
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return DensityMatrix.pure(vec, check=False)


def wishart_density(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """Full-rank random density matrix G G(dagger) / Tr from a Ginibre draw."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    mat = g @ g.conj().T
    return DensityMatrix(mat / mat.trace().real, check=False)


def sample_haar_unitary(dim: int, seed: SeedPath) -> np.ndarray:
    """Haar-distributed unitary via a complex Ginibre matrix and phase-fixed QR."""
    if dim < 2:
        raise ValueError("dim must be at least 2")
    rng = seed.rng()
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    return q


def _brickwork_layer(n: int, layer_index: int, seed: SeedPath) -> np.ndarray:
    """One layer of Haar 2-local blocks; odd layers pair (0,1),(2,3),...

    Open boundary: unpaired edge qubits get the identity.
    """
    offset = 0 if layer_index % 2 == 1 else 1
    factors: List[np.ndarray] = []
    if offset == 1:
        factors.append(np.eye(2, dtype=complex))
    q = offset
    block = 0
    while q + 1 < n:
        factors.append(sample_haar_unitary(4, seed.derive(f"layer{layer_index}", f"block{block}")))
        q += 2
        block += 1
    if q < n:
        factors.append(np.eye(2, dtype=complex))
    return kron(*factors)


def build_alternating_layered(n: int, layers: int, seed: SeedPath) -> np.ndarray:
    """Product of brickwork layers (later layers act last); layers=0 gives I."""
    if n < 2:
        raise ValueError("brickwork needs at least two qubits")
    u = np.eye(2**n, dtype=complex)
    for layer in range(1, layers + 1):
        u = _brickwork_layer(n, layer, seed) @ u
    return u


def ising_hamiltonian(n: int, coupling: float, field_x: float, field_z: float) -> np.ndarray:
    """H = J * sum Z_i Z_{i+1} (open chain) + Bz * sum Z_i + Bx * sum X_i."""
    if n < 1:
        raise ValueError("need at least one qubit")
    d = 2**n
    h = np.zeros((d, d), dtype=complex)
    for i in range(n - 1):
        h += coupling * (single_qubit_op(PAULI_Z, i, n) @ single_qubit_op(PAULI_Z, i + 1, n))
    for i in range(n):
        h += field_z * single_qubit_op(PAULI_Z, i, n)
        h += field_x * single_qubit_op(PAULI_X, i, n)
    return h


def ising_unitary(n: int, coupling: float, field_x: float, field_z: float, dt: float) -> np.ndarray:
    return herm_exp(ising_hamiltonian(n, coupling, field_x, field_z), dt)


class UnitaryChannel:
    """Conjugation rho -> U rho U(dagger)."""

    def __init__(self, unitary: np.ndarray):
        self.unitary = unitary
        self._adjoint = unitary.conj().T

    def apply(self, mat: np.ndarray) -> np.ndarray:
        return self.unitary @ mat @ self._adjoint


class InterleavedNoisyChannel:
    """Alternating application of local noise and brickwork unitary layers."""

    def __init__(self, layer_unitaries, noise, qubit_count: int, placement: str):
        self.layer_unitaries = list(layer_unitaries)
        self.qubit_count = qubit_count
        self.placement = placement
        self._superop = noise.superoperator()
        self._adjoints = [u.conj().T for u in self.layer_unitaries]

    def _noise(self, mat: np.ndarray) -> np.ndarray:
        return apply_superop_mat(mat, self.qubit_count, self._superop, range(self.qubit_count))

    def apply(self, mat: np.ndarray) -> np.ndarray:
        for u, u_dag in zip(self.layer_unitaries, self._adjoints):
            if self.placement == "pre":
                mat = self._noise(mat)
            mat = u @ mat @ u_dag
            if self.placement == "post":
                mat = self._noise(mat)
        return mat


ReservoirChannel = Union[UnitaryChannel, InterleavedNoisyChannel]


def materialize(spec: ReservoirSpec, seed: SeedPath) -> ReservoirChannel:
    """Draw the concrete channel for one run; reuse it at every time step."""
    if isinstance(spec, HaarGlobal):
        return UnitaryChannel(sample_haar_unitary(2 ** (spec.n_a + spec.n_h), seed))
    if isinstance(spec, AlternatingLayered):
        return UnitaryChannel(build_alternating_layered(spec.n_a + spec.n_h, spec.layers, seed))
    if isinstance(spec, Ising):
        n = spec.n_a + spec.n_h
        return UnitaryChannel(
            ising_unitary(n, spec.coupling, spec.field_x, spec.field_z, spec.dt)
        )
    if isinstance(spec, NoiseInterleaved):
        n = spec.n_a + spec.n_h
        layers = [
            _brickwork_layer(n, layer, seed) for layer in range(1, spec.inner.layers + 1)
        ]
        return InterleavedNoisyChannel(layers, spec.noise, n, spec.placement)
    raise TypeError(f"unknown reservoir spec {spec!r}")
