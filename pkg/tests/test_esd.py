import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from qlink import esd, kernels
from qlink.errors import ConfigurationError, DimensionError, NumericalError
from qlink.qmath import PAULIS, SX, SY, SZ, random_density_matrix, random_unitary


@pytest.fixture(scope="module")
def small_ring():
    h = esd.SpinRingHamiltonian.random(4, 0.1, seed=3)
    opt = esd.optimize_vha(h, layers=8, tolerance=1e-4, seed=0)
    return h, opt


def test_ring_topology():
    h = esd.SpinRingHamiltonian.random(5, seed=1)
    assert h.edges == [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]
    assert all(-1 <= w <= 1 for w in h.omega)
    assert esd.SpinRingHamiltonian.random(5, seed=1).omega == h.omega
    with pytest.raises(ConfigurationError):
        esd.SpinRingHamiltonian(1, (0.3,))


@given(st.floats(-3, 3))
def test_edge_unitary_matches_exponential(theta):
    ss = sum(np.kron(p, p) for p in (SX, SY, SZ))
    assert np.abs(esd._edge_unitary(theta) - expm(-1j * theta * ss)).max() < 1e-12
    prod = np.eye(4)
    for p in (SX, SY, SZ):
        prod = esd._pair_rotation(p, theta) @ prod
    assert np.abs(prod - expm(-1j * theta * ss)).max() < 1e-12


def test_gate_counts_and_xi_mapping():
    h = esd.SpinRingHamiltonian.random(6)
    assert esd.gate_counts(h, 20)[0] == 360
    noise = esd.GateNoise.from_xi(1.0, h, 20)
    assert noise.xi(h, 20) == pytest.approx(1.0)
    assert noise.depol_1q * 5 == pytest.approx(noise.depol_2q)
    with pytest.raises(ConfigurationError):
        esd.GateNoise(1.5)


def test_zero_layers_returns_initial_state():
    h = esd.SpinRingHamiltonian.random(3, seed=2)
    rho = esd.vha_prepare(h, esd.VhaParams((), ()))
    k = esd._basis_ket(h.initial_bits())
    assert np.array_equal(rho, np.outer(k, k.conj()))


def test_noiseless_prepare_matches_statevector(small_ring):
    h, opt = small_ring
    rho = esd.vha_prepare(h, opt.params)
    psi = esd.vha_statevector(h, opt.params)
    assert np.abs(rho - np.outer(psi, psi.conj())).max() < 1e-10
    assert opt.error <= 1e-4


def test_vha_two_spin_toy():
    h = esd.SpinRingHamiltonian.random(2, seed=0)
    assert esd.optimize_vha(h, layers=4, tolerance=1e-6).error <= 1e-6


def test_optimal_input_returns_quickly(small_ring):
    h, opt = small_ring
    again = esd.optimize_vha(h, layers=8, initial=opt.params)
    assert again.restarts == 1 and again.iterations <= 2


def test_teleport_noise_no_error_weights():
    assert esd.no_error_weight(0.995, 6) == pytest.approx(0.97, abs=5e-3)
    assert esd.no_error_weight(0.995, 100) == pytest.approx(0.60, abs=1e-2)
    # the identity component of the n-qubit product channel carries weight f^n
    rho = random_density_matrix(4, np.random.default_rng(0))
    assert np.array_equal(esd.teleport_noise(rho, [0, 1], 1.0), rho)
    with pytest.raises(ConfigurationError):
        esd.teleport_noise(rho, [0], 0.0)
    with pytest.raises(DimensionError):
        esd.teleport_noise(rho, [2], 0.9)


def test_teleport_noise_single_qubit_fidelity():
    f = 0.995
    out = esd.teleport_noise(np.diag([1.0, 0.0]).astype(complex), [0], f)
    # a Pauli channel with no-error weight f leaves |0> with probability f + (1-f)/3
    assert out[0, 0].real == pytest.approx(f + (1 - f) / 3, abs=1e-12)


@pytest.mark.parametrize("alpha", range(4))
def test_teleportation_identity(alpha):
    rng = np.random.default_rng(alpha)
    states = [random_unitary(2, rng)[:, 0] for _ in range(100)]
    assert esd.teleportation_identity(alpha, states).max_distance < 1e-12


def test_teleportation_is_pauli_channel():
    rng = np.random.default_rng(5)
    for _ in range(100):
        w = rng.dirichlet(np.ones(4))
        d = np.abs(esd.teleportation_ptm(w).entries - esd.pauli_channel_ptm(w).entries).max()
        assert d < 1e-10
    ptm = esd.teleportation_ptm([0.97, 0.01, 0.01, 0.01]).entries
    assert np.allclose(ptm, np.diag([1, 0.96, 0.96, 0.96]), atol=1e-12)


@given(st.integers(2, 4), st.integers(0, 10 ** 6))
def test_estimator_exact_on_pure_states(n, seed):
    rng = np.random.default_rng(seed)
    psi = random_unitary(4, rng)[:, 0]
    rho = np.outer(psi, psi.conj())
    sigma = random_density_matrix(4, rng) - 0.25 * np.eye(4)
    raw = np.real(np.trace(rho @ sigma))
    assert esd.mitigated_expectation([rho] * n, sigma) == pytest.approx(raw, abs=1e-12)


def test_estimator_two_level_oracle():
    rho = np.diag([0.8, 0.2]).astype(complex)
    assert esd.mitigated_expectation([rho, rho], SZ) == pytest.approx((0.64 - 0.04) / 0.68, abs=1e-12)
    with pytest.raises(ConfigurationError):
        esd.mitigated_expectation([rho], SZ)
    with pytest.raises(DimensionError):
        esd.mitigated_expectation([rho, np.eye(4) / 4], SZ)


def test_estimator_vanishing_denominator():
    a, b = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    with pytest.raises(NumericalError):
        esd.mitigated_expectation([a, b], SZ)


def test_circuit_matches_formula_noiseless(small_ring):
    h, opt = small_ring
    psi = esd.vha_statevector(h, opt.params)
    rho = np.outer(psi, psi.conj())
    hm = h.matrix()
    est = esd.derangement_circuit_estimate([rho, rho], hm).value
    assert est == pytest.approx(esd.mitigated_expectation([rho, rho], hm), abs=1e-9)


def test_circuit_matches_formula_for_mixed_copies():
    h = esd.SpinRingHamiltonian.random(2, seed=4)
    opt = esd.optimize_vha(h, layers=4, tolerance=1e-6)
    rho = esd.vha_prepare(h, opt.params, esd.GateNoise(0.02))
    hm = h.matrix()
    est = esd.derangement_circuit_estimate([rho, rho], hm).value
    assert est == pytest.approx(esd.mitigated_expectation([rho, rho], hm), abs=1e-8)
    noisy = esd.teleport_noise(rho, [0, 1], 0.97)
    est = esd.derangement_circuit_estimate([rho, rho], hm, bell_f=0.97).value
    assert est == pytest.approx(esd.mitigated_expectation([rho, noisy], hm), abs=1e-8)


def test_depolarizing_equivalence(small_ring):
    h, opt = small_ring
    noise = esd.GateNoise.from_xi(0.5, h, opt.params.layers)
    rho = esd.vha_prepare(h, opt.params, noise)
    f = 0.99
    explicit = rho.copy()  # kernels may update in place
    for q in range(h.n):
        explicit = kernels.depolarize(explicit, 4 * (1 - f) / 3, [q], h.n)
    hm = h.matrix()
    a = esd.derangement_circuit_estimate([rho, rho], hm, noise, f).value
    b = esd.derangement_circuit_estimate([rho, explicit], hm, noise, 1.0).value
    assert a == pytest.approx(b, abs=1e-9)


def test_circuit_errors():
    rho = np.eye(4) / 4
    with pytest.raises(ConfigurationError):
        esd.derangement_circuit_estimate([rho] * 3, np.eye(4))
    with pytest.raises(DimensionError):
        esd.derangement_circuit_estimate([rho, rho], np.eye(2))


def test_shot_sampling_is_seeded(small_ring):
    h, opt = small_ring
    rho = esd.vha_prepare(h, opt.params, esd.GateNoise.from_xi(1.0, h, opt.params.layers))
    hm = h.matrix()
    a = esd.derangement_circuit_estimate([rho, rho], hm, shots=20000, seed=1)
    b = esd.derangement_circuit_estimate([rho, rho], hm, shots=20000, seed=1)
    exact = esd.derangement_circuit_estimate([rho, rho], hm)
    assert a.value == b.value
    assert a.value == pytest.approx(exact.value, abs=0.1)


def test_dominant_eigenvector_bias(small_ring):
    h, opt = small_ring
    rows = esd.energy_error_sweep(h, opt.params, [0.05, 0.5, 1.0, 2.0, 5.0], modes=("ideal",), n_copies=(2,))
    for r in rows:
        assert r.mitigated_error < r.unmitigated_error, r


def test_sweep_noiseless_limit_and_modes(small_ring):
    h, opt = small_ring
    rows = esd.energy_error_sweep(h, opt.params, [0.0], modes=("unmitigated", "ideal", "noisy-derangement"),
                                  bell_f=1.0)
    assert all(r.mitigated_error < 1e-4 for r in rows)
    with pytest.raises(ConfigurationError):
        esd.energy_error_sweep(h, opt.params, [0.1], modes=("bogus",))


def test_more_copies_suppress_more(small_ring):
    h, opt = small_ring
    rows = esd.energy_error_sweep(h, opt.params, [1.0], modes=("ideal",), n_copies=(2, 3, 4))
    errs = [r.mitigated_error for r in rows]
    assert errs[1] < errs[0] and errs[2] < errs[0]
