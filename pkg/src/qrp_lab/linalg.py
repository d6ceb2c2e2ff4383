"""Dense complex linear algebra over qubit registers.

Conventions used throughout the package:

* qubit 0 is the most significant tensor factor, so an operator acting on
  qubit ``k`` of an ``n``-qubit register is ``I(2^k) (x) op (x) I(2^(n-k-1))``;
* a composite register splits into accessible qubits ``0 .. n_a-1`` followed
  by hidden qubits ``n_a .. n-1``, i.e. ``rho_total = rho_a (x) rho_h``.

Everything here is a pure function of immutable inputs; nothing keeps
interior mutable state, so values can be shared freely between workers.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-9
MAX_QUBITS = 12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)

PAULI_BY_LETTER = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def qubit_count_for_dim(dim: int) -> int:
    """Number of qubits for a power-of-two dimension; raises otherwise."""
    if dim < 1 or dim & (dim - 1):
        raise ValueError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product of square matrices, leftmost factor most significant."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    for op in ops:
        a = np.asarray(op)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("kron operands must be square matrices")
    return reduce(np.kron, ops)


def single_qubit_op(op: np.ndarray, qubit: int, qubit_count: int) -> np.ndarray:
    """Embed a 2x2 operator on one qubit of an n-qubit register."""
    if not 0 <= qubit < qubit_count:
        raise IndexError(f"qubit {qubit} out of range for {qubit_count} qubits")
    left = np.eye(2**qubit, dtype=complex)
    right = np.eye(2 ** (qubit_count - qubit - 1), dtype=complex)
    return kron(left, op, right)


class PauliString:
    """Tensor product of single-qubit Paulis, one letter per qubit."""

    __slots__ = ("letters",)

    def __init__(self, letters: str):
        letters = letters.upper()
        if not letters or any(c not in PAULI_BY_LETTER for c in letters):
            raise ValueError(f"invalid Pauli string {letters!r}")
        self.letters = letters

    def __len__(self) -> int:
        return len(self.letters)

    def __repr__(self) -> str:
        return f"PauliString({self.letters!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PauliString) and self.letters == other.letters

    def __hash__(self) -> int:
        return hash(("PauliString", self.letters))

    @property
    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    def matrix(self) -> np.ndarray:
        return kron(*(PAULI_BY_LETTER[c] for c in self.letters))

    def trace(self) -> float:
        """Tr[O]: 2^n for the identity string, 0 otherwise."""
        return float(2 ** len(self.letters)) if self.is_identity else 0.0


Observable = Union[PauliString, np.ndarray]


def observable_matrix(obs: Observable) -> np.ndarray:
    return obs.matrix() if isinstance(obs, PauliString) else np.asarray(obs, dtype=complex)


class DensityMatrix:
    """Positive unit-trace operator over a labelled qubit register."""

    __slots__ = ("mat", "qubit_count")

    def __init__(self, mat: np.ndarray, check: bool = True):
        mat = np.asarray(mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density matrix must be square")
        self.qubit_count = qubit_count_for_dim(mat.shape[0])
        if self.qubit_count > MAX_QUBITS:
            raise ValueError(f"register of {self.qubit_count} qubits exceeds cap {MAX_QUBITS}")
        self.mat = mat
        if check:
            self.validate()

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def validate(self) -> "DensityMatrix":
        """Check Hermiticity, unit trace and positivity; O(d^3), keep off hot paths."""
        if np.abs(self.mat - self.mat.conj().T).max() > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = self.mat.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} != 1")
        if np.linalg.eigvalsh(self.mat).min() < -EIGENVALUE_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        return self

    @classmethod
    def pure(cls, vec: Sequence[complex], check: bool = True) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), check=check)

    @classmethod
    def computational_basis(cls, qubit_count: int, index: int = 0) -> "DensityMatrix":
        v = np.zeros(2**qubit_count, dtype=complex)
        v[index] = 1.0
        return cls(np.outer(v, v.conj()), check=False)

    @classmethod
    def maximally_mixed(cls, qubit_count: int) -> "DensityMatrix":
        d = 2**qubit_count
        return cls(np.eye(d, dtype=complex) / d, check=False)

    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.mat, self.mat).real)

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(np.kron(self.mat, other.mat), check=False)

    def __repr__(self) -> str:
        return f"DensityMatrix(qubits={self.qubit_count})"


def partial_trace_mat(mat: np.ndarray, qubit_count: int, keep: Iterable[int]) -> np.ndarray:
    """Trace out every register qubit not listed in ``keep`` (raw-matrix form)."""
    keep = sorted(set(keep))
    for q in keep:
        if not 0 <= q < qubit_count:
            raise IndexError(f"qubit {q} out of range for {qubit_count} qubits")
    traced = [q for q in range(qubit_count) if q not in keep]
    if not traced:
        return mat.copy()
    tensor = mat.reshape((2,) * (2 * qubit_count))
    remaining = list(range(qubit_count))
    for q in reversed(traced):
        pos = remaining.index(q)
        m = len(remaining)
        tensor = np.trace(tensor, axis1=pos, axis2=pos + m)
        remaining.pop(pos)
    d_keep = 2 ** len(keep)
    return tensor.reshape(d_keep, d_keep)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the kept qubits; kept qubits keep their relative order."""
    out = partial_trace_mat(rho.mat, rho.qubit_count, keep)
    return DensityMatrix(out, check=False)


def expectation(obs: Observable, rho: DensityMatrix) -> float:
    """Tr[O rho] for a Hermitian observable; imaginary part must be noise-level."""
    op = observable_matrix(obs)
    mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if op.shape != mat.shape:
        raise ValueError(f"observable shape {op.shape} does not match state {mat.shape}")
    value = complex(np.einsum("ij,ji->", op, mat))
    assert abs(value.imag) < HERMITICITY_TOL, f"expectation has imaginary part {value.imag}"
    return value.real


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Trace norm || rho - sigma ||_1: sum of |eigenvalues| of the difference."""
    if rho.dim != sigma.dim:
        raise ValueError("trace_distance needs equal dimensions")
    eigs = np.linalg.eigvalsh(rho.mat - sigma.mat)
    return float(np.abs(eigs).sum())


def herm_exp(h: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i * angle * h) for Hermitian h, via spectral decomposition."""
    h = np.asarray(h, dtype=complex)
    if np.abs(h - h.conj().T).max() > HERMITICITY_TOL:
        raise ValueError("herm_exp requires a Hermitian matrix")
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * angle * w)
    return (v * phases) @ v.conj().T


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    d = u.shape[0]
    return bool(np.linalg.norm(u.conj().T @ u - np.eye(d)) <= tol)
