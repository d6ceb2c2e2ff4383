"""Cross-check of the recursion against its single-pass extended-space form.

The multi-step output can be rewritten as one trace on t register copies:
resolve each intermediate hidden marginal in an operator basis, so a tuple of
basis elements threads the copies together.  The basis element attached to
copy tau appears as its Hilbert-Schmidt dual (dagger) in the projector slot
of copy tau and verbatim in the state slot of copy tau+1.  This form is a
correctness oracle only; production simulation always uses the recursion.
"""

from __future__ import annotations

from functools import reduce
from itertools import product
from typing import List, Optional, Sequence

import numpy as np

from .engine import QrpConfig, qrp_init, qrp_step, readout_exact
from .ensembles import (
    HaarGlobal,
    SeedPath,
    UnitaryChannel,
    haar_pure_density,
    sample_haar_unitary,
    wishart_density,
)
from .linalg import DensityMatrix, PauliString, observable_matrix

MAX_STEPS = 3

_PAULI_LETTERS = ("I", "X", "Y", "Z")


def hidden_operator_basis(d_h: int, kind: str = "singleton") -> List[np.ndarray]:
    """Orthonormal operator basis over the hidden space (Hilbert-Schmidt norm)."""
    if kind == "singleton":
        out = []
        for i in range(d_h):
            for j in range(d_h):
                e = np.zeros((d_h, d_h), dtype=complex)
                e[i, j] = 1.0
                out.append(e)
        return out
    if kind == "pauli":
        if d_h != 2:
            raise ValueError("the Pauli basis variant covers one hidden qubit")
        from .linalg import PAULI_BY_LETTER

        return [PAULI_BY_LETTER[c] / np.sqrt(2.0) for c in _PAULI_LETTERS]
    raise ValueError(f"unknown basis kind {kind!r}")


def qrp_output_unrolled(
    unitary: np.ndarray,
    rho_h0: DensityMatrix,
    inputs: Sequence[DensityMatrix],
    obs: np.ndarray | PauliString,
    basis: Optional[List[np.ndarray]] = None,
) -> float:
    """Evaluate the t-step output as a single trace on the t-fold copy space."""
    t = len(inputs)
    if not 1 <= t <= MAX_STEPS:
        raise ValueError(f"unrolled evaluation supports 1..{MAX_STEPS} steps, got {t}")
    d_a = inputs[0].dim
    d_h = rho_h0.dim
    if d_a != 2 or d_h != 2:
        raise ValueError("unrolled evaluation covers one accessible + one hidden qubit")
    if basis is None:
        basis = hidden_operator_basis(d_h)
    obs_mat = observable_matrix(obs)
    eye_a = np.eye(d_a, dtype=complex)
    u_ext = reduce(np.kron, [unitary] * t)
    u_ext_dag = u_ext.conj().T

    total = 0.0 + 0.0j
    for tup in product(range(len(basis)), repeat=t - 1):
        obs_factors = [np.kron(eye_a, basis[idx].conj().T) for idx in tup] + [obs_mat]
        state_factors = [np.kron(inputs[0].mat, rho_h0.mat)]
        for tau in range(1, t):
            state_factors.append(np.kron(inputs[tau].mat, basis[tup[tau - 1]]))
        obs_ext = reduce(np.kron, obs_factors)
        state_ext = reduce(np.kron, state_factors)
        total += np.einsum("ij,ji->", obs_ext, u_ext @ state_ext @ u_ext_dag)
    assert abs(total.imag) < 1e-9, f"unrolled value has imaginary part {total.imag}"
    return float(total.real)


def qrp_output_recursive(
    unitary: np.ndarray,
    rho_h0: DensityMatrix,
    inputs: Sequence[DensityMatrix],
    obs: PauliString,
) -> float:
    """Step-by-step evaluation through the engine; the oracle side of the check."""
    cfg = QrpConfig(reservoir=HaarGlobal(n_a=1, n_h=1), observables=(obs,))
    channel = UnitaryChannel(unitary)
    state = qrp_init(rho_h0)
    for rho_in in inputs:
        state = qrp_step(state, rho_in, cfg, channel)
    return float(readout_exact(state, (obs,))[0])


def compare_direct_vs_unrolled(
    trials: int, seed: SeedPath, steps: Sequence[int] = (2, 3)
) -> float:
    """Max |unrolled - recursive| over seeded random instances; deterministic."""
    if trials < 1:
        raise ValueError("need at least one trial")
    worst = 0.0
    letters = [a + b for a in _PAULI_LETTERS for b in _PAULI_LETTERS if a + b != "II"]
    for i in range(trials):
        rng = seed.derive("trial", i).rng()
        unitary = sample_haar_unitary(4, seed.derive("unitary", i))
        rho_h0 = wishart_density(2, rng)
        obs = PauliString(letters[rng.integers(len(letters))])
        for t in steps:
            inputs = [haar_pure_density(2, rng) for _ in range(t)]
            direct = qrp_output_recursive(unitary, rho_h0, inputs, obs)
            unrolled = qrp_output_unrolled(unitary, rho_h0, inputs, obs)
            worst = max(worst, abs(direct - unrolled))
    return worst
