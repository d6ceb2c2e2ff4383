import numpy as np
import pytest
import scipy.linalg

from qrp_lab.ensembles import SeedPath, haar_pure_density, sample_haar_unitary, wishart_density
from qrp_lab.linalg import (
    DensityMatrix,
    PAULI_I,
    PAULI_X,
    PAULI_Z,
    PauliString,
    expectation,
    herm_exp,
    kron,
    partial_trace,
    partial_trace_mat,
    trace_distance,
)

RNG = np.random.default_rng(424242)


def bell_state() -> DensityMatrix:
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)
    return DensityMatrix.pure(v)


def test_kron_identities():
    assert np.allclose(kron(PAULI_I, PAULI_I), np.eye(4))
    assert np.allclose(kron(PAULI_Z, PAULI_Z), np.diag([1.0, -1.0, -1.0, 1.0]))


def test_kron_basis_projectors():
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    out = kron(p0, p1)
    expected = np.zeros((4, 4))
    expected[1, 1] = 1.0  # |01> is basis index 1
    assert np.allclose(out, expected)


def test_kron_associativity():
    a, b, c = (RNG.standard_normal((2, 2)) + 1j * RNG.standard_normal((2, 2)) for _ in range(3))
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)))


def test_kron_rejects_non_square():
    with pytest.raises(ValueError):
        kron(np.ones((2, 3)), PAULI_I)


def _partial_trace_oracle(mat, n, keep):
    """Elementwise index-summation partial trace, independent of the library path."""
    keep = sorted(keep)
    traced = [q for q in range(n) if q not in keep]
    dk = 2 ** len(keep)
    out = np.zeros((dk, dk), dtype=complex)
    for i in range(dk):
        for j in range(dk):
            ibits = [(i >> (len(keep) - 1 - a)) & 1 for a in range(len(keep))]
            jbits = [(j >> (len(keep) - 1 - a)) & 1 for a in range(len(keep))]
            for s in range(2 ** len(traced)):
                sbits = [(s >> (len(traced) - 1 - a)) & 1 for a in range(len(traced))]
                row = [0] * n
                col = [0] * n
                for a, q in enumerate(keep):
                    row[q], col[q] = ibits[a], jbits[a]
                for a, q in enumerate(traced):
                    row[q] = col[q] = sbits[a]
                r = int("".join(map(str, row)), 2)
                c = int("".join(map(str, col)), 2)
                out[i, j] += mat[r, c]
    return out


def test_partial_trace_product_state():
    rng = np.random.default_rng(5)
    rho_a = wishart_density(2, rng)
    rho_h = wishart_density(4, rng)
    joint = rho_a.tensor(rho_h)
    reduced = partial_trace(joint, keep=[0])
    assert np.allclose(reduced.mat, rho_a.mat, atol=1e-12)


def test_partial_trace_bell_marginal():
    rho = bell_state()
    for keep in ([0], [1]):
        assert np.allclose(partial_trace(rho, keep).mat, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_matches_index_summation_oracle():
    rng = np.random.default_rng(17)
    rho = wishart_density(8, rng)
    for keep in ([0, 2], [1], [0, 1, 2], [2]):
        got = partial_trace_mat(rho.mat, 3, keep)
        want = _partial_trace_oracle(rho.mat, 3, keep)
        assert np.allclose(got, want, atol=1e-12)


def test_partial_trace_three_qubit_product_factors():
    rng = np.random.default_rng(23)
    parts = [haar_pure_density(2, rng) for _ in range(3)]
    joint = parts[0].tensor(parts[1]).tensor(parts[2])
    reduced = partial_trace(joint, keep=[0, 2])
    assert np.allclose(reduced.mat, np.kron(parts[0].mat, parts[2].mat), atol=1e-12)


def test_partial_trace_is_trace_preserving_and_linear():
    rng = np.random.default_rng(3)
    a, b = wishart_density(8, rng), wishart_density(8, rng)
    mix = 0.3 * a.mat + 0.7 * b.mat
    got = partial_trace_mat(mix, 3, [1])
    want = 0.3 * partial_trace_mat(a.mat, 3, [1]) + 0.7 * partial_trace_mat(b.mat, 3, [1])
    assert np.allclose(got, want, atol=1e-12)
    assert abs(np.trace(got) - 1.0) < 1e-12


def test_partial_trace_rejects_bad_index():
    rho = DensityMatrix.maximally_mixed(2)
    with pytest.raises(IndexError):
        partial_trace(rho, keep=[3])


def test_expectation_examples():
    zero = DensityMatrix.computational_basis(1, 0)
    assert expectation(PauliString("Z"), zero) == pytest.approx(1.0, abs=1e-12)
    assert expectation(PauliString("X"), zero) == pytest.approx(0.0, abs=1e-12)
    assert expectation(PauliString("ZZ"), bell_state()) == pytest.approx(1.0, abs=1e-12)


def test_expectation_pauli_bounded():
    rng = np.random.default_rng(29)
    for _ in range(20):
        rho = wishart_density(4, rng)
        val = expectation(PauliString("XY"), rho)
        assert -1.0 - 1e-12 <= val <= 1.0 + 1e-12


def test_expectation_dimension_mismatch():
    with pytest.raises(ValueError):
        expectation(PauliString("Z"), DensityMatrix.maximally_mixed(2))


def test_trace_distance_examples():
    rho = wishart_density(4, np.random.default_rng(31))
    assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-12)
    zero = DensityMatrix.computational_basis(1, 0)
    one = DensityMatrix.computational_basis(1, 1)
    assert trace_distance(zero, one) == pytest.approx(2.0, abs=1e-12)


def test_trace_distance_matches_singular_value_oracle():
    rng = np.random.default_rng(37)
    a, b = wishart_density(8, rng), wishart_density(8, rng)
    got = trace_distance(a, b)
    want = np.linalg.svd(a.mat - b.mat, compute_uv=False).sum()
    assert got == pytest.approx(want, rel=1e-10)


def test_herm_exp_zero_angle_and_phase():
    assert np.allclose(herm_exp(PAULI_Z, 0.0), np.eye(2))
    assert np.allclose(herm_exp(PAULI_Z, np.pi), -np.eye(2), atol=1e-12)


def test_herm_exp_matches_scaling_and_squaring_oracle():
    rng = np.random.default_rng(41)
    g = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    h = (g + g.conj().T) / 2
    got = herm_exp(h, 0.73)
    want = scipy.linalg.expm(-1j * 0.73 * h)
    assert np.allclose(got, want, atol=1e-10)
    assert np.allclose(got.conj().T @ got, np.eye(8), atol=1e-10)


def test_herm_exp_rejects_non_hermitian():
    with pytest.raises(ValueError):
        herm_exp(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)


def test_density_matrix_invariants_enforced():
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2) * 0.7)  # trace != 1
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.5], [0.4, 0.5]]))  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]).astype(complex))  # negative eigenvalue


def test_unitary_conjugation_preserves_trace_and_spectrum():
    rng = np.random.default_rng(43)
    rho = wishart_density(8, rng)
    u = sample_haar_unitary(8, SeedPath(77))
    evolved = u @ rho.mat @ u.conj().T
    assert abs(np.trace(evolved) - 1.0) < 1e-9
    assert np.allclose(
        np.sort(np.linalg.eigvalsh(evolved)), np.sort(np.linalg.eigvalsh(rho.mat)), atol=1e-9
    )


def test_pauli_string_invariants():
    obs = PauliString("XIZ")
    mat = obs.matrix()
    assert np.allclose(mat, mat.conj().T)
    eigs = np.linalg.eigvalsh(mat)
    assert np.allclose(np.abs(eigs), 1.0)
    assert np.trace(mat @ mat).real == pytest.approx(2**3)
    assert obs.weight == 2 and not obs.is_identity
    with pytest.raises(ValueError):
        PauliString("XQ")
