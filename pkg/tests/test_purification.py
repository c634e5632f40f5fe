import numpy as np
import pytest
from hypothesis import given, strategies as st

from qlink.errors import ConfigurationError, NotPurifiableError
from qlink.purification import (
    CNOT, PHI_PLUS, NoiseModel, PurificationProtocol, RoundSpec, alt_protocol_s_gates, bell_mixture,
    check_purifiable, purify_round, round_outcomes, run_protocol, sample_raw_attempts, twirl, werner_state,
)
from qlink.qmath import PSI_MINUS, bell_diagonal, bell_state, fidelity_to_pure

IDEAL = NoiseModel.ideal()


def _brute_force_bit_round(a, b):
    """Register order A1 B1 A2 B2; CNOT A1->A2 and B1->B2; keep equal Z outcomes on A2, B2."""
    rho = np.kron(a, b)
    eye = np.eye(2)

    def op(ctrl, tgt):
        # CNOT between two of four qubits via projectors
        p0, p1 = np.diag([1, 0]), np.diag([0, 1])
        x = np.array([[0, 1], [1, 0]])
        f0 = [eye] * 4
        f1 = [eye] * 4
        f0[ctrl], f1[ctrl], f1[tgt] = p0, p1, x
        k = lambda fs: np.kron(np.kron(fs[0], fs[1]), np.kron(fs[2], fs[3]))  # noqa: E731
        return k(f0) + k(f1)

    u = op(0, 2) @ op(1, 3)
    rho = u @ rho @ u.conj().T
    kept = np.zeros((4, 4), complex)
    for m in range(2):
        proj = np.kron(np.eye(4), np.outer(np.eye(4)[3 * m], np.eye(4)[3 * m]))
        # reorder: register is A1 B1 A2 B2, so the measured pair (A2, B2) is the last two qubits
        r = proj @ rho @ proj
        kept += r.reshape(4, 4, 4, 4).trace(axis1=1, axis2=3)
    p = np.trace(kept).real
    return kept / p, p


weights = st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4).map(lambda w: np.array(w) / sum(w))


def test_round_matches_brute_force_on_grid():
    grid = np.linspace(0.55, 0.98, 20)
    for k, f in enumerate(grid):
        rest = (1 - f) * np.array([0.5, 0.3, 0.2])
        rest = np.roll(rest, k)
        rho = bell_mixture([f, *rest]).matrix
        out, p = purify_round(rho, rho, RoundSpec("bit"), IDEAL)
        want, pw = _brute_force_bit_round(rho, rho)
        assert abs(p - pw) <= 1e-10
        assert np.abs(out.matrix - want).max() <= 1e-10


@given(weights)
def test_bit_round_bell_diagonal_formula(w):
    # Bell order here: Phi+ (I), Psi+ (X), Psi- (Y), Phi- (Z)
    rho = bell_mixture(w)
    out, p = purify_round(rho, rho, RoundSpec("bit"), IDEAL)
    w0, w1, w2, w3 = w
    n = (w0 + w3) ** 2 + (w1 + w2) ** 2
    assert p == pytest.approx(n, abs=1e-12)
    want = np.array([w0 ** 2 + w3 ** 2, w1 ** 2 + w2 ** 2, 2 * w1 * w2, 2 * w0 * w3]) / n
    assert np.allclose(bell_diagonal(out), want, atol=1e-12)


@given(st.floats(0.5001, 0.999))
def test_werner_purification_is_monotone(f):
    out, _ = purify_round(werner_state(f), werner_state(f), RoundSpec("bit"), IDEAL)
    assert fidelity_to_pure(out, PHI_PLUS) > f


@given(weights, st.floats(0, 0.02), st.floats(0, 0.02), st.sampled_from(["bit", "phase"]))
def test_outcome_probabilities_sum_to_one(w, p2, pm, target):
    rho = bell_mixture(w)
    noise = NoiseModel(p2 / 5, p2, pm)
    blocks = round_outcomes(rho, rho, RoundSpec(target, (("H",), ("H",))), noise)
    total = sum(np.trace(b).real for b in blocks.values())
    assert total == pytest.approx(1.0, abs=1e-9)
    _, p_acc = purify_round(rho, rho, RoundSpec(target), noise)
    assert 0 < p_acc <= 1
    # acceptance equals the agreeing reports of the outcome table (phase rounds only relabel the kept pair)
    if target == "bit":
        blocks = round_outcomes(rho, rho, RoundSpec(target), noise)
        assert p_acc == pytest.approx(np.trace(blocks[(0, 0)] + blocks[(1, 1)]).real, abs=1e-12)


def test_psi_minus_input_becomes_phi_plus():
    psi = np.outer(PSI_MINUS.amplitudes, PSI_MINUS.amplitudes.conj())
    raw = 0.9 * psi + 0.1 * np.eye(4) / 4
    stats = run_protocol((raw, 0.9, 16.5), PurificationProtocol.canonical(2), NoiseModel())
    assert int(np.argmax(bell_diagonal(stats.final_state))) == 0
    assert stats.fidelity > fidelity_to_pure(raw, PSI_MINUS)


def test_attempt_accounting():
    raw = werner_state(0.9)
    stats = run_protocol((raw, 0.8, 10.0), PurificationProtocol.canonical(2), IDEAL)
    p = [1 - f for f in stats.per_round_failure]
    want = 2 * (2 * (1 / 0.8) / p[0]) / p[1]
    assert stats.expected_raw_pairs == pytest.approx(want)
    assert stats.generation_rate == pytest.approx(1e3 / (want * 10.0))
    assert stats.expected_successful_raw_pairs == pytest.approx(4 / (p[0] * p[1]))
    samples = sample_raw_attempts(0.8, p, np.random.default_rng(0), n_samples=20000)
    assert samples.mean() == pytest.approx(want, rel=0.03)


@pytest.fixture(scope="module")
def cavity_raw():
    from qlink.cavity import CavityParams, OptimizableParameters, generate_raw_pair

    return [generate_raw_pair(OptimizableParameters.table3(), CavityParams(T2_charge=t)) for t in (400.0, 100.0, 50.0)]


def test_s_gate_variant(cavity_raw):
    noisy = NoiseModel.from_2q(0.005)
    for raw in cavity_raw:
        for n in (2, 4):
            proto = PurificationProtocol.canonical(n)
            ideal = run_protocol(raw, proto, IDEAL).concurrence
            assert alt_protocol_s_gates(raw, proto, IDEAL).concurrence >= ideal - 1e-12
            assert alt_protocol_s_gates(raw, proto, noisy).concurrence <= run_protocol(raw, proto, noisy).concurrence
            same = alt_protocol_s_gates(raw, proto, IDEAL, gate="I")
            assert np.abs(same.final_state.matrix - run_protocol(raw, proto, IDEAL).final_state.matrix).max() < 1e-12


def test_twirl():
    rng = np.random.default_rng(3)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    t = twirl(rho).matrix
    b = np.column_stack([bell_state(a).amplitudes for a in range(4)])
    inb = b.conj().T @ t @ b
    assert np.abs(inb - np.diag(np.diag(inb))).max() < 1e-12
    w = twirl(rho, isotropic=True)
    d = bell_diagonal(w)
    assert np.allclose(d[1:], d[1], atol=1e-12)


def test_errors():
    with pytest.raises(ConfigurationError):
        RoundSpec("sideways")
    with pytest.raises(ConfigurationError):
        RoundSpec("bit", (("Q",), ()))
    with pytest.raises(ConfigurationError):
        NoiseModel(depol_2q=1.5)
    with pytest.raises(ConfigurationError):
        PurificationProtocol(())
    with pytest.raises(NotPurifiableError):
        check_purifiable(np.eye(4) / 4)
