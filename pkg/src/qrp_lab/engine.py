"""The reservoir-processing recursion: inject, evolve, (optionally) decohere, read out.

One step overwrites the accessible register with a fresh input, applies the
fixed reservoir channel to the joint state, optionally applies local Pauli
noise to every qubit, and keeps the hidden marginal as the memory carried
into the next step.  States are values; every step returns a new one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .channels import PauliNoise, apply_superop_mat
from .ensembles import ReservoirChannel, ReservoirSpec, SeedPath, materialize
from .linalg import (
    DensityMatrix,
    PauliString,
    expectation,
    observable_matrix,
    partial_trace_mat,
)


@dataclass(frozen=True)
class QrpState:
    """Hidden-qubit state between iterations plus the step counter."""

    hidden: DensityMatrix
    step: int
    full_last: Optional[DensityMatrix] = None


@dataclass(frozen=True)
class QrpConfig:
    reservoir: ReservoirSpec
    observables: Tuple[PauliString, ...]
    inter_step_noise: Optional[PauliNoise] = None
    shots: Optional[int] = None

    def __post_init__(self):
        n = self.reservoir.n_a + self.reservoir.n_h
        for obs in self.observables:
            if len(obs) != n:
                raise ValueError(f"observable {obs!r} does not cover {n} qubits")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be positive")


def qrp_init(rho_h0: DensityMatrix) -> QrpState:
    """Start a run from a validated hidden-register state."""
    rho_h0.validate()
    return QrpState(hidden=rho_h0, step=0, full_last=None)


def qrp_step(
    state: QrpState,
    input_state: DensityMatrix,
    cfg: QrpConfig,
    channel: ReservoirChannel,
) -> QrpState:
    """Advance one iteration: full = channel(input (x) hidden), hidden = Tr_a[full]."""
    n_a, n_h = cfg.reservoir.n_a, cfg.reservoir.n_h
    if input_state.qubit_count != n_a:
        raise ValueError(
            f"input covers {input_state.qubit_count} qubits, expected {n_a}"
        )
    if state.hidden.qubit_count != n_h:
        raise ValueError(
            f"hidden state covers {state.hidden.qubit_count} qubits, expected {n_h}"
        )
    n = n_a + n_h
    full = channel.apply(np.kron(input_state.mat, state.hidden.mat))
    if cfg.inter_step_noise is not None and not cfg.inter_step_noise.is_identity:
        full = apply_superop_mat(
            full, n, cfg.inter_step_noise.superoperator(), range(n)
        )
    hidden = partial_trace_mat(full, n, range(n_a, n))
    return QrpState(
        hidden=DensityMatrix(hidden, check=False),
        step=state.step + 1,
        full_last=DensityMatrix(full, check=False),
    )


def readout_exact(state: QrpState, observables: Sequence[PauliString]) -> np.ndarray:
    """Exact expectation of each observable on the latest post-evolution state."""
    if state.full_last is None:
        raise ValueError("readout requested before the first step")
    return np.array([expectation(observable_matrix(o), state.full_last) for o in observables])


def readout_shots(state: QrpState, obs: PauliString, shots: int, seed: SeedPath) -> float:
    """Mean of ``shots`` +-1 draws with p(+1) = (1 + <obs>)/2; unbiased, seeded."""
    if not isinstance(obs, PauliString):
        raise TypeError("shot sampling requires a Pauli string observable")
    if state.full_last is None:
        raise ValueError("readout requested before the first step")
    value = expectation(observable_matrix(obs), state.full_last)
    p_plus = min(1.0, max(0.0, (1.0 + value) / 2.0))
    ups = seed.rng().binomial(shots, p_plus)
    return 2.0 * ups / shots - 1.0


def run_sequence(
    rho_h0: DensityMatrix,
    inputs: Sequence[DensityMatrix],
    cfg: QrpConfig,
    seed: SeedPath,
    channel: Optional[ReservoirChannel] = None,
) -> List[np.ndarray]:
    """Process a whole input sequence; the reservoir is materialized once.

    Returns one readout vector per time step (exact, or shot-sampled when the
    config sets ``shots``).  Passing ``channel`` reuses an already materialized
    reservoir, e.g. to share one draw across several series.
    """
    if channel is None:
        channel = materialize(cfg.reservoir, seed.derive("reservoir"))
    state = qrp_init(rho_h0)
    readouts: List[np.ndarray] = []
    for step, rho_in in enumerate(inputs, start=1):
        state = qrp_step(state, rho_in, cfg, channel)
        if cfg.shots is None:
            readouts.append(readout_exact(state, cfg.observables))
        else:
            readouts.append(
                np.array(
                    [
                        readout_shots(state, obs, cfg.shots, seed.derive("shots", step, k))
                        for k, obs in enumerate(cfg.observables)
                    ]
                )
            )
    return readouts
