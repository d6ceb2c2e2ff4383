import numpy as np
import pytest

from qrp_lab.channels import PauliNoise, apply_pauli_noise
from qrp_lab.encoding import encode_exponential
from qrp_lab.engine import (
    QrpConfig,
    QrpState,
    qrp_init,
    qrp_step,
    readout_exact,
    readout_shots,
    run_sequence,
)
from qrp_lab.ensembles import (
    AlternatingLayered,
    HaarGlobal,
    Ising,
    NoiseInterleaved,
    SeedPath,
    UnitaryChannel,
    haar_pure_density,
    materialize,
    sample_haar_unitary,
    wishart_density,
)
from qrp_lab.linalg import DensityMatrix, PauliString, expectation, partial_trace

SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def one_one_config(**kwargs):
    return QrpConfig(
        reservoir=HaarGlobal(1, 1), observables=(PauliString("ZI"),), **kwargs
    )


def test_qrp_init_accepts_valid_states():
    state = qrp_init(DensityMatrix.computational_basis(2, 0))
    assert state.step == 0 and state.full_last is None
    qrp_init(DensityMatrix.maximally_mixed(2))


def test_qrp_init_rejects_invalid_state():
    bad = DensityMatrix(np.eye(2, dtype=complex), check=False)  # trace 2
    with pytest.raises(ValueError):
        qrp_init(bad)


def test_identity_channel_step_gives_product_state():
    cfg = one_one_config()
    channel = UnitaryChannel(np.eye(4, dtype=complex))
    rng = np.random.default_rng(1)
    hidden = wishart_density(2, rng)
    inp = haar_pure_density(2, rng)
    out = qrp_step(qrp_init(hidden), inp, cfg, channel)
    assert out.step == 1
    assert np.allclose(out.full_last.mat, np.kron(inp.mat, hidden.mat), atol=1e-12)
    assert np.allclose(out.hidden.mat, hidden.mat, atol=1e-12)


def test_swap_channel_moves_input_into_hidden():
    # SWAP (rho_in (x) rho_h) SWAP = rho_h (x) rho_in, so the new hidden is the input.
    cfg = one_one_config()
    channel = UnitaryChannel(SWAP)
    rng = np.random.default_rng(2)
    hidden = wishart_density(2, rng)
    inp = wishart_density(2, rng)
    out = qrp_step(qrp_init(hidden), inp, cfg, channel)
    assert np.allclose(out.hidden.mat, inp.mat, atol=1e-12)
    assert np.allclose(out.full_last.mat, np.kron(hidden.mat, inp.mat), atol=1e-12)


def test_step_preserves_trace_and_hidden_consistency():
    cfg = one_one_config(inter_step_noise=PauliNoise(0.9, 0.8, 0.7))
    channel = materialize(cfg.reservoir, SeedPath(5))
    state = qrp_init(DensityMatrix.computational_basis(1, 0))
    rng = np.random.default_rng(3)
    for _ in range(4):
        state = qrp_step(state, haar_pure_density(2, rng), cfg, channel)
        assert abs(np.trace(state.full_last.mat) - 1.0) < 1e-12
        reduced = partial_trace(state.full_last, keep=[1])
        assert np.abs(state.hidden.mat - reduced.mat).max() < 1e-12


def test_step_dimension_mismatch():
    cfg = one_one_config()
    channel = UnitaryChannel(np.eye(4, dtype=complex))
    with pytest.raises(ValueError):
        qrp_step(qrp_init(DensityMatrix.maximally_mixed(1)),
                 DensityMatrix.maximally_mixed(2), cfg, channel)


def test_readout_requires_a_step():
    with pytest.raises(ValueError):
        readout_exact(qrp_init(DensityMatrix.maximally_mixed(1)), (PauliString("ZI"),))


def test_readout_identity_observable_and_direct_trace_oracle():
    cfg = QrpConfig(
        reservoir=HaarGlobal(1, 1),
        observables=(PauliString("II"), PauliString("XZ")),
    )
    channel = materialize(cfg.reservoir, SeedPath(8))
    rng = np.random.default_rng(4)
    state = qrp_step(qrp_init(wishart_density(2, rng)), haar_pure_density(2, rng), cfg, channel)
    vec = readout_exact(state, cfg.observables)
    assert vec[0] == pytest.approx(1.0, abs=1e-12)
    direct = np.trace(PauliString("XZ").matrix() @ state.full_last.mat).real
    assert vec[1] == pytest.approx(direct, abs=1e-12)


def test_readout_z_on_untouched_zero_state():
    cfg = QrpConfig(reservoir=HaarGlobal(1, 1), observables=(PauliString("ZI"),))
    channel = UnitaryChannel(np.eye(4, dtype=complex))
    state = qrp_step(
        qrp_init(DensityMatrix.computational_basis(1, 0)),
        DensityMatrix.computational_basis(1, 0),
        cfg,
        channel,
    )
    assert readout_exact(state, cfg.observables)[0] == pytest.approx(1.0)


def test_shot_readout_deterministic_extremes():
    cfg = one_one_config()
    channel = UnitaryChannel(np.eye(4, dtype=complex))
    state = qrp_step(
        qrp_init(DensityMatrix.computational_basis(1, 0)),
        DensityMatrix.computational_basis(1, 0),
        cfg,
        channel,
    )
    for shots in (1, 10, 1000):
        assert readout_shots(state, PauliString("ZI"), shots, SeedPath(9)) == 1.0


def test_shot_readout_concentrates_at_large_shot_count():
    # <X> = 0 on |0>: the estimate obeys binomial concentration around 0.
    cfg = one_one_config()
    channel = UnitaryChannel(np.eye(4, dtype=complex))
    state = qrp_step(
        qrp_init(DensityMatrix.computational_basis(1, 0)),
        DensityMatrix.computational_basis(1, 0),
        cfg,
        channel,
    )
    n = 1_000_000
    est = readout_shots(state, PauliString("XI"), n, SeedPath(10))
    assert abs(est) < 4.0 / np.sqrt(n)


def test_shot_readout_variance_matches_binomial_oracle():
    cfg = one_one_config()
    channel = materialize(cfg.reservoir, SeedPath(11))
    rng = np.random.default_rng(6)
    state = qrp_step(qrp_init(wishart_density(2, rng)), haar_pure_density(2, rng), cfg, channel)
    obs = PauliString("ZI")
    value = expectation(obs.matrix(), state.full_last)
    shots = 1000
    reps = 400
    draws = np.array(
        [readout_shots(state, obs, shots, SeedPath(12, r)) for r in range(reps)]
    )
    target = (1.0 - value**2) / shots
    assert np.mean(draws) == pytest.approx(value, abs=4 * np.sqrt(target / reps))
    assert np.var(draws, ddof=1) == pytest.approx(target, rel=0.35)


def test_shot_readout_rejects_general_observable():
    cfg = one_one_config()
    channel = UnitaryChannel(np.eye(4, dtype=complex))
    state = qrp_step(
        qrp_init(DensityMatrix.maximally_mixed(1)),
        DensityMatrix.maximally_mixed(1),
        cfg,
        channel,
    )
    with pytest.raises(TypeError):
        readout_shots(state, np.eye(4), 10, SeedPath(1))


def test_run_sequence_empty_and_single_step():
    cfg = one_one_config()
    assert run_sequence(DensityMatrix.maximally_mixed(1), [], cfg, SeedPath(2)) == []
    rng = np.random.default_rng(7)
    inp = haar_pure_density(2, rng)
    hidden = DensityMatrix.computational_basis(1, 0)
    single = run_sequence(hidden, [inp], cfg, SeedPath(2))
    # A one-step run is the single-pass architecture: evolve once, read out.
    channel = materialize(cfg.reservoir, SeedPath(2).derive("reservoir"))
    direct = expectation(
        PauliString("ZI").matrix(),
        DensityMatrix(channel.apply(np.kron(inp.mat, hidden.mat)), check=False),
    )
    assert single[0][0] == pytest.approx(direct, abs=1e-12)


def test_run_sequence_identity_reservoir_fixed_point():
    cfg = QrpConfig(
        reservoir=Ising(1, 1, -1.0, 0.7, 1.5, 0.0), observables=(PauliString("ZI"),)
    )
    inp = encode_exponential(0.3, 1)
    outs = run_sequence(DensityMatrix.computational_basis(1, 0), [inp] * 5, cfg, SeedPath(3))
    values = [o[0] for o in outs]
    assert np.allclose(values, values[0], atol=1e-12)


def test_run_sequence_reproducible_bit_exact():
    cfg = QrpConfig(
        reservoir=HaarGlobal(1, 2),
        observables=(PauliString("ZII"), PauliString("IXI")),
        shots=64,
    )
    rng = np.random.default_rng(8)
    inputs = [haar_pure_density(2, rng) for _ in range(4)]
    hidden = DensityMatrix.computational_basis(2, 0)
    a = run_sequence(hidden, inputs, cfg, SeedPath(14))
    b = run_sequence(hidden, inputs, cfg, SeedPath(14))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_interleaved_reservoir_and_inter_step_noise_compose():
    # Reservoir-internal noise layers apply first, then the inter-step channel.
    noise = PauliNoise(0.9, 0.9, 0.9)
    spec = NoiseInterleaved(AlternatingLayered(1, 1, 2), noise)
    cfg = QrpConfig(
        reservoir=spec, observables=(PauliString("ZI"),), inter_step_noise=noise
    )
    seed = SeedPath(15)
    channel = materialize(spec, seed)
    rng = np.random.default_rng(9)
    hidden = wishart_density(2, rng)
    inp = haar_pure_density(2, rng)
    stepped = qrp_step(qrp_init(hidden), inp, cfg, channel)
    manual = channel.apply(np.kron(inp.mat, hidden.mat))
    manual = apply_pauli_noise(noise, DensityMatrix(manual, check=False)).mat
    assert np.allclose(stepped.full_last.mat, manual, atol=1e-12)


def test_config_validates_observable_length():
    with pytest.raises(ValueError):
        QrpConfig(reservoir=HaarGlobal(1, 1), observables=(PauliString("Z"),))
