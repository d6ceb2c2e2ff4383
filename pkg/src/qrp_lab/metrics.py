"""Monte-Carlo estimators and analytic references for the experiment harness.

Covers output-variance saturation over random reservoirs, memory indicators
(variance of the output over an ensemble of early inputs or initial hidden
states), pairwise output deviations, noise-induced erasure checks, encoding
concentration, hypothesis-test power, and the end-to-end delay-task fit.

The outer Monte-Carlo loop runs over reservoir draws, the inner loop over the
varied state slot; every sample owns a seed derived from the caller's
``SeedPath``, so results are reproducible and order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import binom

from .channels import PauliNoise, apply_superop_mat, contraction_chi, sandwiched_renyi2
from .encoding import EncodingSpec, ExponentialProduct, LayeredNoisy, encode
from .engine import QrpConfig, run_sequence
from .ensembles import (
    NoiseInterleaved,
    ReservoirSpec,
    SeedPath,
    haar_pure_density,
    materialize,
    wishart_density,
)
from .linalg import (
    DensityMatrix,
    PauliString,
    observable_matrix,
    partial_trace_mat,
    trace_distance,
)
from .training import TrainConfig, build_feature_matrix, default_ridge, fit_readout, mse_loss

DEFAULT_OUTER_SAMPLES = 200
DEFAULT_INNER_SAMPLES = 32


# ---------------------------------------------------------------------------
# Result rows and ensemble descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsRow:
    """One record of the harness: sweep coordinates, estimate, error, reference."""

    n_a: int
    n_h: int
    t: int
    param: Optional[float]
    estimate: float
    std_error: float
    n_samples: int
    analytic_ref: Optional[float] = None

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")
        if not math.isfinite(self.estimate):
            raise ValueError("estimate must be finite")


@dataclass(frozen=True)
class HaarPureStates:
    """Varied slot drawn as Haar-random pure states."""


@dataclass(frozen=True)
class FixedState:
    state: DensityMatrix


@dataclass(frozen=True)
class FixedStateList:
    states: Tuple[DensityMatrix, ...]

    def __post_init__(self):
        if len(self.states) < 2:
            raise ValueError("a state list ensemble needs at least two members")


@dataclass(frozen=True)
class ClassicalUniform:
    """Uniform classical inputs on [0, 1] pushed through an encoding."""

    encoding: EncodingSpec


@dataclass(frozen=True)
class ProductClassicalUniform:
    """Independent uniform classical input per accessible qubit.

    Each qubit gets its own single-frequency encoded draw; at desk scale this
    context reaches the asymptotic memory-decay regime fastest, so it is the
    default context for the memory indicators.
    """

    n_a: int


StateEnsemble = Union[
    HaarPureStates, FixedState, FixedStateList, ClassicalUniform, ProductClassicalUniform
]


@dataclass(frozen=True)
class EnsembleSpec:
    """What to randomize: reservoir draws, the input slots, the initial memory.

    ``input_ensemble`` governs the varied slot of memory indicators (and the
    one shared sequence of variance runs); ``context_ensemble`` governs the
    non-varied input steps and defaults to the input ensemble.
    """

    reservoir: ReservoirSpec
    n_reservoirs: int = DEFAULT_OUTER_SAMPLES
    n_inner: int = DEFAULT_INNER_SAMPLES
    input_ensemble: Optional[StateEnsemble] = None
    context_ensemble: Optional[StateEnsemble] = None
    initial_hidden: Optional[StateEnsemble] = None

    def __post_init__(self):
        if self.n_reservoirs < 1:
            raise ValueError("need at least one reservoir sample")
        if self.n_inner < 2:
            raise ValueError("inner ensembles need at least two draws")


def _draw_state(ensemble: StateEnsemble, dim: int, rng: np.random.Generator) -> DensityMatrix:
    if isinstance(ensemble, HaarPureStates):
        return haar_pure_density(dim, rng)
    if isinstance(ensemble, FixedState):
        return ensemble.state
    if isinstance(ensemble, FixedStateList):
        return ensemble.states[int(rng.integers(len(ensemble.states)))]
    if isinstance(ensemble, ClassicalUniform):
        return encode(float(rng.uniform()), ensemble.encoding)
    if isinstance(ensemble, ProductClassicalUniform):
        state = encode(float(rng.uniform()), ExponentialProduct(1))
        for _ in range(ensemble.n_a - 1):
            state = state.tensor(encode(float(rng.uniform()), ExponentialProduct(1)))
        return state
    raise TypeError(f"unknown state ensemble {ensemble!r}")


# ---------------------------------------------------------------------------
# Sample-moment helpers
# ---------------------------------------------------------------------------


def mean_with_se(samples: np.ndarray) -> Tuple[float, float]:
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2:
        raise ValueError("need at least two samples")
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(n))


def variance_with_se(samples: np.ndarray) -> Tuple[float, float]:
    """Unbiased sample variance with a moment-based standard error."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2:
        raise ValueError("need at least two samples")
    s2 = float(samples.var(ddof=1))
    centered = samples - samples.mean()
    m4 = float(np.mean(centered**4))
    var_of_var = max(m4 - s2 * s2 * (n - 3) / (n - 1), 0.0) / n
    return s2, math.sqrt(var_of_var)


# ---------------------------------------------------------------------------
# Analytic references
# ---------------------------------------------------------------------------


def pauli_trace_square(obs: PauliString) -> float:
    """Tr[O^2] = 2^n for any Pauli string."""
    return float(2 ** len(obs))


def variance_saturation(n_a: int, n_h: int) -> float:
    """Large-t output variance, leading term: 1 / (d_a * d_h^2) for Pauli readouts."""
    return 1.0 / (2**n_a * 2 ** (2 * n_h))


def delta_temp(t: int, n_a: int, n_h: int, obs: Optional[PauliString] = None) -> float:
    """Transient variance term Tr[O^2] / (d_a^(t+1) * d_h^2); decays as d_a^-t."""
    if t < 1:
        raise ValueError("t must be at least 1")
    tr_o2 = pauli_trace_square(obs) if obs is not None else float(2 ** (n_a + n_h))
    return tr_o2 / (2 ** (n_a * (t + 1)) * 2 ** (2 * n_h))


def variance_prediction(t: int, n_a: int, n_h: int) -> float:
    """Saturation plus transient: the finite-t variance of a Pauli readout."""
    return variance_saturation(n_a, n_h) + delta_temp(t, n_a, n_h)


def saturation_ratio(t: int, n_a: int, n_h: int) -> float:
    """Transient-to-saturated variance ratio d_h / d_a^(t-1)."""
    return 2**n_h / 2 ** (n_a * (t - 1))


def memory_reference(t: int, n_a: int, n_h: int) -> float:
    """Leading memory-indicator value 1 / (d_h * d_a^t) for Haar varied slots."""
    return 1.0 / (2**n_h * 2 ** (n_a * t))


def erasure_decay_reference(t: int, q: float) -> float:
    """State-independent factor sqrt(2 ln2 * q^((t-1)/ln2)) of the unital bound."""
    return math.sqrt(2.0 * math.log(2.0) * q ** ((t - 1) / math.log(2.0)))


def unital_erasure_bound(t: int, q: float, entropy_sum: float) -> float:
    """Full unital-noise bound for a pair with total initial 2-Renyi divergence."""
    return erasure_decay_reference(t, q) * math.sqrt(entropy_sum)


def encoding_concentration_bound(t: int, q: float, layers: int, n_a: int) -> float:
    """Deviation bound sqrt(t * 2 ln2 * q^((L+1)/ln2) * S2(rho0 || I/d_a)).

    The encoding reference state is |0...0>, so S2 against the maximally mixed
    state is n_a * ln 2 nats.
    """
    s2_ref = n_a * math.log(2.0)
    return math.sqrt(t * 2.0 * math.log(2.0) * q ** ((layers + 1) / math.log(2.0)) * s2_ref)


def chebyshev_tail(var: float, delta: float) -> float:
    """Tail probability bound min(1, var / delta^2)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return min(1.0, var / delta**2)


# ---------------------------------------------------------------------------
# Trajectory runner (raw matrices; the hot loop of every estimator)
# ---------------------------------------------------------------------------


def _run_outputs(
    channel,
    hidden_mat: np.ndarray,
    input_mats: Sequence[np.ndarray],
    obs_mat: np.ndarray,
    n_a: int,
    n_h: int,
    record_steps: Sequence[int],
    noise_superop: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Expectations of one observable at the requested steps of one trajectory."""
    n = n_a + n_h
    record = set(record_steps)
    out = np.empty(len(record_steps))
    index = {step: k for k, step in enumerate(record_steps)}
    hidden = hidden_mat
    for step, inp in enumerate(input_mats, start=1):
        full = channel.apply(np.kron(inp, hidden))
        if noise_superop is not None:
            full = apply_superop_mat(full, n, noise_superop, range(n))
        hidden = partial_trace_mat(full, n, range(n_a, n))
        if step in record:
            value = complex(np.einsum("ij,ji->", obs_mat, full))
            out[index[step]] = value.real
    return out


def _resolve_hidden(spec: EnsembleSpec, rng: np.random.Generator) -> DensityMatrix:
    ens = spec.initial_hidden
    d_h = 2**spec.reservoir.n_h
    if ens is None:
        return DensityMatrix.computational_basis(spec.reservoir.n_h, 0)
    return _draw_state(ens, d_h, rng)


def _resolve_input_ensemble(spec: EnsembleSpec) -> StateEnsemble:
    if spec.input_ensemble is not None:
        return spec.input_ensemble
    return HaarPureStates()


# ---------------------------------------------------------------------------
# Output variance over reservoir draws
# ---------------------------------------------------------------------------


def output_samples_over_reservoirs(
    spec: EnsembleSpec, t_list: Sequence[int], obs: PauliString, seed: SeedPath
) -> np.ndarray:
    """<O>_t per reservoir draw, with one fixed input sequence and one rho_h(0).

    The input sequence and initial hidden state are drawn once and shared by
    every reservoir sample, so the spread measures reservoir randomness only.
    """
    n_a, n_h = spec.reservoir.n_a, spec.reservoir.n_h
    t_max = max(t_list)
    input_ens = spec.input_ensemble or ClassicalUniform(ExponentialProduct(n_a))
    seq_rng = seed.derive("inputs").rng()
    input_mats = [_draw_state(input_ens, 2**n_a, seq_rng).mat for _ in range(t_max)]
    hidden = _resolve_hidden(spec, seed.derive("hidden").rng())
    obs_mat = observable_matrix(obs)
    samples = np.empty((spec.n_reservoirs, len(t_list)))
    for i in range(spec.n_reservoirs):
        channel = materialize(spec.reservoir, seed.derive("reservoir").indexed(i))
        samples[i] = _run_outputs(channel, hidden.mat, input_mats, obs_mat, n_a, n_h, t_list)
    return samples


def variance_curve(
    spec: EnsembleSpec, t_list: Sequence[int], obs: PauliString, seed: SeedPath
) -> List[MetricsRow]:
    if spec.n_reservoirs < 2:
        raise ValueError("variance over reservoirs needs at least two draws")
    samples = output_samples_over_reservoirs(spec, t_list, obs, seed)
    n_a, n_h = spec.reservoir.n_a, spec.reservoir.n_h
    ref = variance_saturation(n_a, n_h) if not obs.is_identity else None
    rows = []
    for k, t in enumerate(t_list):
        var, se = variance_with_se(samples[:, k])
        rows.append(
            MetricsRow(
                n_a=n_a,
                n_h=n_h,
                t=t,
                param=None,
                estimate=var,
                std_error=se,
                n_samples=spec.n_reservoirs,
                analytic_ref=ref,
            )
        )
    return rows


def variance_over_reservoirs(
    spec: EnsembleSpec, t: int, obs: PauliString, seed: SeedPath
) -> MetricsRow:
    return variance_curve(spec, [t], obs, seed)[0]


# ---------------------------------------------------------------------------
# Memory indicators
# ---------------------------------------------------------------------------


def memory_samples(
    spec: EnsembleSpec,
    vary: str,
    tau: int,
    t_list: Sequence[int],
    obs: PauliString,
    seed: SeedPath,
) -> np.ndarray:
    """<O> samples shaped (n_reservoirs, n_inner, len(t_list)).

    ``vary="input"`` redraws the step-tau input per inner sample (readout at
    step tau + t); ``vary="hidden"`` redraws the initial hidden state (readout
    at step t).  Everything else is held fixed within an inner ensemble.
    """
    if vary not in ("input", "hidden"):
        raise ValueError("vary must be 'input' or 'hidden'")
    if vary == "input" and tau < 1:
        raise ValueError("tau must be at least 1")
    n_a, n_h = spec.reservoir.n_a, spec.reservoir.n_h
    n = n_a + n_h
    t_max = max(t_list)
    obs_mat = observable_matrix(obs)
    input_ens = _resolve_input_ensemble(spec)
    context_ens = spec.context_ensemble or ProductClassicalUniform(n_a)
    samples = np.empty((spec.n_reservoirs, spec.n_inner, len(t_list)))
    for i in range(spec.n_reservoirs):
        channel = materialize(spec.reservoir, seed.derive("reservoir").indexed(i))
        context_rng = seed.derive("context").indexed(i).rng()
        if vary == "input":
            total_steps = tau + t_max
            context = [
                _draw_state(context_ens, 2**n_a, context_rng).mat for _ in range(total_steps)
            ]
            hidden0 = _resolve_hidden(spec, context_rng).mat
            # The steps before tau are identical for every inner draw.
            for inp in context[: tau - 1]:
                full = channel.apply(np.kron(inp, hidden0))
                hidden0 = partial_trace_mat(full, n, range(n_a, n))
            record = [tau_plus for tau_plus in (tau + t for t in t_list)]
            for j in range(spec.n_inner):
                vary_rng = seed.derive("vary", i, j).rng()
                varied = _draw_state(input_ens, 2**n_a, vary_rng).mat
                tail_inputs = [varied] + context[tau:]
                samples[i, j] = _run_outputs(
                    channel, hidden0, tail_inputs, obs_mat, n_a, n_h,
                    [r - (tau - 1) for r in record],
                )
        else:
            context = [
                _draw_state(context_ens, 2**n_a, context_rng).mat for _ in range(t_max)
            ]
            hidden_ens = spec.initial_hidden or HaarPureStates()
            for j in range(spec.n_inner):
                vary_rng = seed.derive("vary", i, j).rng()
                hidden0 = _draw_state(hidden_ens, 2**n_h, vary_rng).mat
                samples[i, j] = _run_outputs(
                    channel, hidden0, context, obs_mat, n_a, n_h, list(t_list)
                )
    return samples


def _indicator_rows(
    spec: EnsembleSpec,
    samples: np.ndarray,
    t_list: Sequence[int],
    param: Optional[float] = None,
) -> List[MetricsRow]:
    n_a, n_h = spec.reservoir.n_a, spec.reservoir.n_h
    rows = []
    for k, t in enumerate(t_list):
        inner_vars = samples[:, :, k].var(axis=1, ddof=1)
        estimate = float(inner_vars.mean())
        se = float(inner_vars.std(ddof=1) / math.sqrt(len(inner_vars))) if len(inner_vars) > 1 else 0.0
        rows.append(
            MetricsRow(
                n_a=n_a,
                n_h=n_h,
                t=t,
                param=param,
                estimate=estimate,
                std_error=se,
                n_samples=spec.n_reservoirs * spec.n_inner,
                analytic_ref=memory_reference(t, n_a, n_h),
            )
        )
    return rows


def memory_indicator_input_curve(
    spec: EnsembleSpec, tau: int, t_list: Sequence[int], obs: PauliString, seed: SeedPath,
    param: Optional[float] = None,
) -> List[MetricsRow]:
    samples = memory_samples(spec, "input", tau, t_list, obs, seed)
    return _indicator_rows(spec, samples, t_list, param)


def memory_indicator_input(
    spec: EnsembleSpec, tau: int, t: int, obs: PauliString, seed: SeedPath
) -> MetricsRow:
    return memory_indicator_input_curve(spec, tau, [t], obs, seed)[0]


def memory_indicator_hidden_curve(
    spec: EnsembleSpec, t_list: Sequence[int], obs: PauliString, seed: SeedPath,
    param: Optional[float] = None,
) -> List[MetricsRow]:
    samples = memory_samples(spec, "hidden", 0, t_list, obs, seed)
    return _indicator_rows(spec, samples, t_list, param)


def memory_indicator_hidden(
    spec: EnsembleSpec, t: int, obs: PauliString, seed: SeedPath
) -> MetricsRow:
    return memory_indicator_hidden_curve(spec, [t], obs, seed)[0]


def pairwise_deviation_rows(
    spec: EnsembleSpec,
    vary: str,
    tau: int,
    t_list: Sequence[int],
    obs: PauliString,
    seed: SeedPath,
) -> List[MetricsRow]:
    """Mean squared deviation between i.i.d. pairs of the varied slot.

    Pairs are consecutive inner draws, so the estimate shares its randomness
    with the matching memory indicator and satisfies the factor-4 envelope.
    """
    samples = memory_samples(spec, vary, tau, t_list, obs, seed)
    n_pairs = spec.n_inner // 2
    if n_pairs < 1:
        raise ValueError("need at least two inner draws to form a pair")
    diffs = samples[:, 0 : 2 * n_pairs : 2, :] - samples[:, 1 : 2 * n_pairs : 2, :]
    sq = diffs**2
    n_a, n_h = spec.reservoir.n_a, spec.reservoir.n_h
    rows = []
    for k, t in enumerate(t_list):
        flat = sq[:, :, k].reshape(-1)
        est, se = mean_with_se(flat)
        rows.append(
            MetricsRow(
                n_a=n_a, n_h=n_h, t=t, param=None,
                estimate=est, std_error=se, n_samples=flat.size,
                analytic_ref=None,
            )
        )
    return rows


def pairwise_deviation(
    spec: EnsembleSpec, t: int, obs: PauliString, seed: SeedPath, tau: int = 1
) -> MetricsRow:
    return pairwise_deviation_rows(spec, "input", tau, [t], obs, seed)[0]


# ---------------------------------------------------------------------------
# Noise-induced erasure
# ---------------------------------------------------------------------------


def _pair_entropy_sum(
    rho_pair: Tuple[DensityMatrix, DensityMatrix],
    sigma_pair: Tuple[DensityMatrix, DensityMatrix],
) -> float:
    """S2(rho_a || sigma_a) + S2(rho_h || sigma_h) of the initial conditions."""
    (rho_a, rho_h), (sigma_a, sigma_h) = rho_pair, sigma_pair
    return sandwiched_renyi2(rho_a, sigma_a) + sandwiched_renyi2(rho_h, sigma_h)


def unital_erasure_trajectory(
    reservoir: ReservoirSpec,
    noise: PauliNoise,
    t_max: int,
    rho_pair: Tuple[DensityMatrix, DensityMatrix],
    sigma_pair: Tuple[DensityMatrix, DensityMatrix],
    obs: PauliString,
    seed: SeedPath,
) -> Tuple[np.ndarray, np.ndarray]:
    """Output deviation |<O>_t(rho) - <O>_t(sigma)| and its bound, per step.

    Both runs share the reservoir draw and every input from step 2 on; local
    Pauli noise acts on all qubits after each reservoir application.
    """
    if noise.strength >= 1.0:
        raise ValueError("unital erasure requires q < 1")
    n_a, n_h = reservoir.n_a, reservoir.n_h
    n = n_a + n_h
    channel = materialize(reservoir, seed.derive("reservoir"))
    shared_rng = seed.derive("shared-inputs").rng()
    shared = [haar_pure_density(2**n_a, shared_rng).mat for _ in range(t_max - 1)]
    noise_superop = noise.superoperator()
    obs_mat = observable_matrix(obs)
    entropy_sum = _pair_entropy_sum(rho_pair, sigma_pair)
    steps = list(range(1, t_max + 1))
    outputs = []
    for first_input, hidden in (rho_pair, sigma_pair):
        inputs = [first_input.mat] + shared
        outputs.append(
            _run_outputs(channel, hidden.mat, inputs, obs_mat, n_a, n_h, steps, noise_superop)
        )
    deltas = np.abs(outputs[0] - outputs[1])
    bounds = np.array([unital_erasure_bound(t, noise.strength, entropy_sum) for t in steps])
    return deltas, bounds


def unital_erasure(
    t: int,
    noise: PauliNoise,
    reservoir: ReservoirSpec,
    rho_pair: Tuple[DensityMatrix, DensityMatrix],
    sigma_pair: Tuple[DensityMatrix, DensityMatrix],
    obs: PauliString,
    seed: SeedPath,
) -> Tuple[float, float]:
    deltas, bounds = unital_erasure_trajectory(
        reservoir, noise, t, rho_pair, sigma_pair, obs, seed
    )
    return float(deltas[t - 1]), float(bounds[t - 1])


def random_full_rank_pair(
    n_a: int, n_h: int, rng: np.random.Generator
) -> Tuple[Tuple[DensityMatrix, DensityMatrix], Tuple[DensityMatrix, DensityMatrix]]:
    """Two independent (input, hidden) pairs of full-rank states."""
    rho = (wishart_density(2**n_a, rng), wishart_density(2**n_h, rng))
    sigma = (wishart_density(2**n_a, rng), wishart_density(2**n_h, rng))
    return rho, sigma


def nonunital_erasure_trajectory(
    t_max: int,
    spec: NoiseInterleaved,
    rho_pair: Tuple[DensityMatrix, DensityMatrix],
    sigma_pair: Tuple[DensityMatrix, DensityMatrix],
    seed: SeedPath,
) -> np.ndarray:
    """Per-step trace distance between two trajectories of a noisy reservoir."""
    if contraction_chi(spec.noise) >= 1.0:
        raise ValueError("non-unital erasure requires a non-unitary channel (chi < 1)")
    n_a, n_h = spec.n_a, spec.n_h
    n = n_a + n_h
    if spec.inner.layers < 2 * n:
        raise ValueError(f"need at least {2 * n} layers for a {n}-qubit register")
    channel = materialize(spec, seed.derive("reservoir"))
    shared_rng = seed.derive("shared-inputs").rng()
    shared = [haar_pure_density(2**n_a, shared_rng).mat for _ in range(t_max - 1)]
    distances = np.empty(t_max)
    hiddens = [rho_pair[1].mat, sigma_pair[1].mat]
    inputs_per_run = [[rho_pair[0].mat] + shared, [sigma_pair[0].mat] + shared]
    fulls = [None, None]
    for step in range(1, t_max + 1):
        for r in range(2):
            full = channel.apply(np.kron(inputs_per_run[r][step - 1], hiddens[r]))
            hiddens[r] = partial_trace_mat(full, n, range(n_a, n))
            fulls[r] = full
        distances[step - 1] = trace_distance(
            DensityMatrix(fulls[0], check=False), DensityMatrix(fulls[1], check=False)
        )
    return distances


# ---------------------------------------------------------------------------
# Noisy-encoding concentration
# ---------------------------------------------------------------------------


def encoding_deviation_trajectory(
    reservoir: ReservoirSpec,
    encoding: LayeredNoisy,
    t_max: int,
    obs: PauliString,
    seed: SeedPath,
) -> Tuple[np.ndarray, np.ndarray]:
    """|<O>_t - mu_t| for one run with noisy-encoded uniform inputs.

    mu_t follows the companion recursion that replaces every injected input by
    the maximally mixed state, so it is input-independent by construction.
    """
    n_a, n_h = reservoir.n_a, reservoir.n_h
    n = n_a + n_h
    channel = materialize(reservoir, seed.derive("reservoir"))
    s_rng = seed.derive("series").rng()
    obs_mat = observable_matrix(obs)
    hidden = DensityMatrix.computational_basis(n_h, 0).mat
    omega_hidden = hidden
    mixed = np.eye(2**n_a, dtype=complex) / 2**n_a
    devs = np.empty(t_max)
    for step in range(1, t_max + 1):
        rho_in = encode(float(s_rng.uniform()), encoding).mat
        full = channel.apply(np.kron(rho_in, hidden))
        hidden = partial_trace_mat(full, n, range(n_a, n))
        omega = channel.apply(np.kron(mixed, omega_hidden))
        omega_hidden = partial_trace_mat(omega, n, range(n_a, n))
        value = complex(np.einsum("ij,ji->", obs_mat, full)).real
        mu = complex(np.einsum("ij,ji->", obs_mat, omega)).real
        devs[step - 1] = abs(value - mu)
    bounds = np.array(
        [
            encoding_concentration_bound(t, encoding.noise.strength, encoding.layers, n_a)
            for t in range(1, t_max + 1)
        ]
    )
    return devs, bounds


# ---------------------------------------------------------------------------
# Hypothesis-test power
# ---------------------------------------------------------------------------


def hypothesis_power(
    p0: float, eps: float, n_per_batch: int, trials: int, seed: SeedPath
) -> Tuple[float, float]:
    """Empirical success of the optimal likelihood test vs 1/2 + N|eps|/2.

    Each trial draws a batch of ``n_per_batch`` Bernoulli samples from one of
    the two hypotheses (fair prior) and decides by likelihood comparison.
    """
    p1 = p0 + eps
    if not (0.0 <= p0 <= 1.0 and 0.0 <= p1 <= 1.0):
        raise ValueError("both hypothesis probabilities must lie in [0, 1]")
    rng = seed.rng()
    truth = rng.integers(2, size=trials)
    p_true = np.where(truth == 1, p1, p0)
    counts = rng.binomial(n_per_batch, p_true)
    with np.errstate(divide="ignore"):
        ll0 = binom.logpmf(counts, n_per_batch, p0)
        ll1 = binom.logpmf(counts, n_per_batch, p1)
    decision = (ll1 > ll0).astype(int)
    empirical = float(np.mean(decision == truth))
    bound = min(1.0, 0.5 + n_per_batch * abs(eps) / 2.0)
    return empirical, bound


# ---------------------------------------------------------------------------
# End-to-end delay task
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DelayTaskResult:
    test_mse: float
    baseline_mse: float
    n_test_rows: int

    @property
    def relative_mse(self) -> float:
        return self.test_mse / self.baseline_mse


def delay_task_experiment(
    reservoir: ReservoirSpec,
    observables: Tuple[PauliString, ...],
    seed: SeedPath,
    shots: Optional[int] = None,
    delay: int = 1,
    n_train_series: int = 8,
    n_test_series: int = 4,
    series_length: int = 40,
    washout: int = 5,
    ridge: Optional[float] = None,
) -> DelayTaskResult:
    """Fit the linear readout to predict the input ``delay`` steps back.

    One reservoir draw serves every series.  The baseline predicts the mean
    training target, so a collapsed model scores near 1 in relative MSE.
    """
    if washout < delay:
        raise ValueError("washout must cover the delay")
    n_a = reservoir.n_a
    cfg = QrpConfig(reservoir=reservoir, observables=observables, shots=shots)
    channel = materialize(reservoir, seed.derive("reservoir"))

    def run_series(tag: str, count: int):
        runs, targets = [], []
        for l in range(count):
            s_rng = seed.derive(tag, l, "signal").rng()
            s_seq = s_rng.uniform(size=series_length)
            inputs = [encode(float(s), ExponentialProduct(n_a)) for s in s_seq]
            readouts = run_sequence(
                DensityMatrix.computational_basis(reservoir.n_h, 0),
                inputs,
                cfg,
                seed.derive(tag, l),
                channel=channel,
            )
            runs.append(readouts)
            targets.append([s_seq[k - delay] if k >= delay else 0.0 for k in range(series_length)])
        return runs, targets

    train_runs, train_targets = run_series("train", n_train_series)
    test_runs, test_targets = run_series("test", n_test_series)
    tc = TrainConfig(washout=washout, ridge=0.0)
    r_train, y_train = build_feature_matrix(train_runs, train_targets, tc)
    r_test, y_test = build_feature_matrix(test_runs, test_targets, tc)
    lam = default_ridge(r_train) if ridge is None else ridge
    weights = fit_readout(r_train, y_train, lam)
    predictions = r_test @ weights.eta
    test_mse = mse_loss(predictions, y_test)
    baseline = mse_loss(np.full_like(y_test, y_train.mean()), y_test)
    return DelayTaskResult(test_mse=test_mse, baseline_mse=baseline, n_test_rows=y_test.size)
