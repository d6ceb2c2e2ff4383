"""Single-qubit noise channels, their product lifts, and entropy contraction.

A single-qubit channel is specified directly by its affine Bloch-sphere
parameters: three axis scalings plus a shift vector, optionally conjugated by
fixed pre/post unitaries.  Channels act on full-register density matrices via
a per-target superoperator [the 4x4 matrix acting on row-major vec(rho)].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from .linalg import (
    DensityMatrix,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    is_unitary,
)

CP_TOL = 1e-9

_PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True)
class PauliNoise:
    """Unital Pauli channel scaling Bloch components by (qx, qy, qz)."""

    qx: float
    qy: float
    qz: float

    def __post_init__(self):
        probs = self.probabilities()
        if min(probs) < -1e-12 or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(
                f"(qx, qy, qz)=({self.qx}, {self.qy}, {self.qz}) is not a valid Pauli channel"
            )

    def probabilities(self) -> Tuple[float, float, float, float]:
        """Mixture weights (p_I, p_X, p_Y, p_Z) equivalent to the Bloch scalings."""
        qx, qy, qz = self.qx, self.qy, self.qz
        return (
            (1.0 + qx + qy + qz) / 4.0,
            (1.0 + qx - qy - qz) / 4.0,
            (1.0 - qx + qy - qz) / 4.0,
            (1.0 - qx - qy + qz) / 4.0,
        )

    @property
    def strength(self) -> float:
        """Characteristic coefficient q = max(|qx|, |qy|, |qz|)."""
        return max(abs(self.qx), abs(self.qy), abs(self.qz))

    @property
    def is_identity(self) -> bool:
        return self.qx == self.qy == self.qz == 1.0

    def superoperator(self) -> np.ndarray:
        return _superoperator_from_map(self.apply_single)

    def apply_single(self, op: np.ndarray) -> np.ndarray:
        """Action on an arbitrary 2x2 operator (linear extension of the Bloch map)."""
        return _normal_form_action(op, (self.qx, self.qy, self.qz), (0.0, 0.0, 0.0))


def depolarizing(p: float) -> PauliNoise:
    """rho -> (1-p) rho + p I/2 on each target."""
    return PauliNoise(1.0 - p, 1.0 - p, 1.0 - p)


@dataclass(frozen=True)
class SingleQubitChannel:
    """Normal-form channel: Bloch map r -> scale*r + shift, with optional unitaries."""

    scale: Tuple[float, float, float]
    shift: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    pre_unitary: Optional[np.ndarray] = None
    post_unitary: Optional[np.ndarray] = None

    def __post_init__(self):
        for u in (self.pre_unitary, self.post_unitary):
            if u is not None and not is_unitary(np.asarray(u), tol=1e-9):
                raise ValueError("pre/post rotations must be unitary")
        choi = choi_matrix(self)
        if np.linalg.eigvalsh(choi).min() < -CP_TOL:
            raise ValueError(
                f"normal-form parameters scale={self.scale} shift={self.shift} "
                "violate complete positivity"
            )

    @property
    def is_unital(self) -> bool:
        return all(t == 0.0 for t in self.shift)

    @property
    def strength(self) -> float:
        """max |scale| component; the decay coefficient for unital channels."""
        return max(abs(s) for s in self.scale)

    def apply_single(self, op: np.ndarray) -> np.ndarray:
        if self.pre_unitary is not None:
            op = self.pre_unitary @ op @ self.pre_unitary.conj().T
        op = _normal_form_action(op, self.scale, self.shift)
        if self.post_unitary is not None:
            op = self.post_unitary @ op @ self.post_unitary.conj().T
        return op

    def superoperator(self) -> np.ndarray:
        return _superoperator_from_map(self.apply_single)


def amplitude_damping(gamma: float) -> SingleQubitChannel:
    """Relaxation towards |0>: scale (sqrt(1-g), sqrt(1-g), 1-g), shift (0, 0, g)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    root = np.sqrt(1.0 - gamma)
    return SingleQubitChannel(scale=(root, root, 1.0 - gamma), shift=(0.0, 0.0, gamma))


def pauli_noise_as_normal_form(noise: PauliNoise) -> SingleQubitChannel:
    return SingleQubitChannel(scale=(noise.qx, noise.qy, noise.qz))


def _normal_form_action(op: np.ndarray, scale, shift) -> np.ndarray:
    """Linear extension of the affine Bloch map to arbitrary 2x2 operators.

    Decompose op = sum_P e_P P; the trace part picks up the shift, the three
    Pauli components are rescaled.
    """
    coeffs = [complex(np.einsum("ij,ji->", p, op)) / 2.0 for p in _PAULIS]
    e_i, e_x, e_y, e_z = coeffs
    out = e_i * PAULI_I
    out = out + (e_x * scale[0] + e_i * shift[0]) * PAULI_X
    out = out + (e_y * scale[1] + e_i * shift[1]) * PAULI_Y
    out = out + (e_z * scale[2] + e_i * shift[2]) * PAULI_Z
    return out


def _superoperator_from_map(apply_single) -> np.ndarray:
    """4x4 matrix S with vec_row(N(E)) = S vec_row(E)."""
    s = np.zeros((4, 4), dtype=complex)
    for j in range(4):
        basis = np.zeros((2, 2), dtype=complex)
        basis[j // 2, j % 2] = 1.0
        s[:, j] = apply_single(basis).reshape(4)
    return s


def choi_matrix(channel) -> np.ndarray:
    """Choi operator sum_ij |i><j| (x) N(|i><j|); PSD iff completely positive."""
    if isinstance(channel, SingleQubitChannel):
        def apply_single(op):
            return _apply_without_cp_check(channel, op)
    else:
        apply_single = channel.apply_single
    choi = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            basis = np.zeros((2, 2), dtype=complex)
            basis[i, j] = 1.0
            block = apply_single(basis)
            choi[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = block
    return choi


def _apply_without_cp_check(channel: SingleQubitChannel, op: np.ndarray) -> np.ndarray:
    # Used during __post_init__ before the CP invariant is established.
    if channel.pre_unitary is not None:
        op = channel.pre_unitary @ op @ channel.pre_unitary.conj().T
    op = _normal_form_action(op, channel.scale, channel.shift)
    if channel.post_unitary is not None:
        op = channel.post_unitary @ op @ channel.post_unitary.conj().T
    return op


def apply_superop_mat(
    mat: np.ndarray, qubit_count: int, superop: np.ndarray, targets: Iterable[int]
) -> np.ndarray:
    """Apply a single-qubit superoperator to each target qubit of a register."""
    d = mat.shape[0]
    s4 = superop.reshape(2, 2, 2, 2)
    out = mat
    for q in sorted(set(targets)):
        if not 0 <= q < qubit_count:
            raise IndexError(f"target qubit {q} out of range for {qubit_count} qubits")
        left = 2**q
        right = d // (2 * left)
        t = out.reshape(left, 2, right, left, 2, right)
        t = np.einsum("ijkl,akbcld->aibcjd", s4, t)
        out = t.reshape(d, d)
    return out


def apply_pauli_noise(
    noise: PauliNoise, rho: DensityMatrix, targets: Optional[Iterable[int]] = None
) -> DensityMatrix:
    """Scale the Bloch components of each target qubit by (qx, qy, qz)."""
    if targets is None:
        targets = range(rho.qubit_count)
    out = apply_superop_mat(rho.mat, rho.qubit_count, noise.superoperator(), targets)
    return DensityMatrix(out, check=False)


def apply_normal_form(
    channel: SingleQubitChannel, rho: DensityMatrix, targets: Optional[Iterable[int]] = None
) -> DensityMatrix:
    """Apply a normal-form channel to each target qubit."""
    if targets is None:
        targets = range(rho.qubit_count)
    out = apply_superop_mat(rho.mat, rho.qubit_count, channel.superoperator(), targets)
    return DensityMatrix(out, check=False)


def contraction_chi(channel) -> float:
    """Average contraction coefficient sqrt((|scale|^2 + |shift|^2) / 3).

    Equals 1 exactly for unitary channels and drops below 1 for any
    non-unitary single-qubit channel.
    """
    if isinstance(channel, PauliNoise):
        scale = (channel.qx, channel.qy, channel.qz)
        shift = (0.0, 0.0, 0.0)
    else:
        scale, shift = channel.scale, channel.shift
    total = sum(s * s for s in scale) + sum(t * t for t in shift)
    return float(np.sqrt(total / 3.0))


def sandwiched_renyi2(
    rho: DensityMatrix, sigma: DensityMatrix, regularize: bool = False
) -> float:
    """Sandwiched 2-Renyi relative entropy ln Tr[(sigma^-1/4 rho sigma^-1/4)^2], in nats.

    Requires support(rho) within support(sigma); with ``regularize`` the sigma
    spectrum is floored at 1e-12 instead of raising.
    """
    if rho.dim != sigma.dim:
        raise ValueError("sandwiched_renyi2 needs equal dimensions")
    w, v = np.linalg.eigh(sigma.mat)
    floor = 1e-12
    if regularize:
        w = np.maximum(w, floor)
    else:
        cutoff = 1e-11
        bad = w < cutoff
        if bad.any():
            kernel = v[:, bad]
            leak = np.linalg.norm(kernel.conj().T @ rho.mat @ kernel)
            if leak > 1e-10:
                raise ValueError(
                    "support violation: rho has weight outside the support of sigma "
                    "(pass regularize=True to floor the spectrum)"
                )
            w = np.where(bad, floor, w)
    inv_quarter = (v * w ** (-0.25)) @ v.conj().T
    core = inv_quarter @ rho.mat @ inv_quarter
    value = float(np.einsum("ij,ji->", core, core).real)
    out = float(np.log(max(value, floor)))
    return max(out, 0.0) if out > -1e-8 else out
