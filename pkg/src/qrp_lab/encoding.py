"""Classical-to-quantum input encodings for the accessible register.

The product encoding gives qubit ``j`` (1-based) the pure state
``RZ(3^(j-1) * pi * s) H |0>``, so each qubit carries the input at its own
exponentially spaced frequency.  The layered variant re-uploads the input
through ``L`` rotation layers (layer ``i`` uses angle ``3^(i-1) * pi * s`` on
every qubit) with local Pauli noise before, between and after the layers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .channels import PauliNoise, apply_pauli_noise
from .linalg import HADAMARD, DensityMatrix, kron


@dataclass(frozen=True)
class ExponentialProduct:
    n_a: int

    def __post_init__(self):
        if self.n_a < 1:
            raise ValueError("need at least one accessible qubit")


@dataclass(frozen=True)
class LayeredNoisy:
    n_a: int
    layers: int
    noise: PauliNoise

    def __post_init__(self):
        if self.n_a < 1:
            raise ValueError("need at least one accessible qubit")
        if self.layers < 1:
            raise ValueError("need at least one encoding layer")


EncodingSpec = Union[ExponentialProduct, LayeredNoisy]


def _rz(angle: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * angle), 0.0], [0.0, np.exp(0.5j * angle)]], dtype=complex
    )


def data_rotation(angle: float) -> np.ndarray:
    """Single-qubit data gate RZ(angle) H."""
    return _rz(angle) @ HADAMARD


def encode_exponential(s: float, n_a: int) -> DensityMatrix:
    """Pure product state with per-qubit frequencies 1, 3, 9, ..."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"input {s} outside [0, 1]")
    zero = np.array([1.0, 0.0], dtype=complex)
    factors = []
    for j in range(n_a):
        vec = data_rotation((3**j) * np.pi * s) @ zero
        factors.append(np.outer(vec, vec.conj()))
    return DensityMatrix(kron(*factors), check=False)


def encode_layered_noisy(s: float, spec: LayeredNoisy) -> DensityMatrix:
    """Noisy re-uploading encoding: noise, rotate, noise, ..., rotate, noise.

    With ``layers`` rotation layers the noise acts ``layers + 1`` times.
    """
    rho = DensityMatrix.computational_basis(spec.n_a, 0)
    rho = apply_pauli_noise(spec.noise, rho)
    for layer in range(1, spec.layers + 1):
        gate = kron(*([data_rotation((3 ** (layer - 1)) * np.pi * s)] * spec.n_a))
        rho = DensityMatrix(gate @ rho.mat @ gate.conj().T, check=False)
        rho = apply_pauli_noise(spec.noise, rho)
    return rho


def encode(s: float, spec: EncodingSpec) -> DensityMatrix:
    if isinstance(spec, ExponentialProduct):
        return encode_exponential(s, spec.n_a)
    if isinstance(spec, LayeredNoisy):
        return encode_layered_noisy(s, spec)
    raise TypeError(f"unknown encoding spec {spec!r}")
