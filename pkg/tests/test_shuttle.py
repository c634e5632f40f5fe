import numpy as np
import pytest
from hypothesis import given, strategies as st

from qlink.errors import ConfigurationError, NumericalError
from qlink.qmath import concurrence
from qlink.shuttle import chain as ch
from qlink.shuttle.hamiltonian import (
    SiteParams, SweepParams, build_shuttle_hamiltonian, orbital_valley_block, static_part, transfer_threshold_tc,
    tunnel_couplings, valley_states,
)
from qlink.shuttle.noise import charge_noise_trace, process_variance, spectrum_at, spectrum_model
from qlink.shuttle.readout import ReadoutParams, basis_states, highlighted_connections, two_electron_hamiltonian

phases = st.floats(-np.pi, np.pi)


@given(st.floats(0.1, 100), phases)
def test_tunnel_coupling_identities(t_c, dphi):
    vc, vf = tunnel_couplings(t_c, dphi)
    assert abs(abs(vc) ** 2 + abs(vf) ** 2 - t_c ** 2) <= 1e-12 * max(1.0, t_c ** 2)
    assert abs(tunnel_couplings(t_c, 0.0)[1]) <= 1e-12
    assert abs(tunnel_couplings(t_c, np.pi)[0]) <= 1e-12 * t_c


@given(phases, phases, st.floats(1, 60))
def test_hamiltonian_block_matches_tunnel_couplings(pl, pr, t_c):
    left, right = SiteParams(60.0, pl), SiteParams(70.0, pr)
    block = orbital_valley_block(static_part(left, right, SweepParams(t_c=t_c, e_soi=0.0)), left, right)
    vc, vf = tunnel_couplings(t_c, pl - pr)
    assert abs(abs(block[0, 0]) - abs(vc)) <= 1e-12
    assert abs(abs(block[0, 1]) - abs(vf)) <= 1e-12


@given(phases)
def test_local_valley_ground_state(phi):
    site = SiteParams(75.0, phi)
    hv = np.array([[0, site.delta], [np.conj(site.delta), 0]])
    g, e = valley_states(phi).T
    assert np.allclose(hv @ g, -75.0 * g, atol=1e-12)
    assert np.allclose(hv @ e, 75.0 * e, atol=1e-12)


def test_shuttle_hamiltonian_is_hermitian():
    left, right = SiteParams(60.0, np.pi / 6, b_x=0.5, b_z=0.5), SiteParams(70.0, 0.0, b_x=-0.5, b_z=-0.5)
    for eps in (-800.0, 0.0, 350.0):
        h = build_shuttle_hamiltonian(left, right, SweepParams(t_c=25.0), eps, with_stationary=True).matrix
        assert np.abs(h - h.conj().T).max() < 1e-12


def test_sweep_unitary_is_unitary_and_converged():
    left, right = SiteParams(70.0, 0.3), SiteParams(80.0, -0.2, b_x=1.0, b_z=3.0)
    sweep = SweepParams()
    u = ch.sweep_unitary(left, right, sweep)
    assert np.abs(u @ u.conj().T - np.eye(8)).max() < 1e-10
    ref = ch.sweep_unitary(left, right, sweep, n_steps=16000)
    e1 = np.abs(u - ref).max()
    e2 = np.abs(ch.sweep_unitary(left, right, sweep, n_steps=4000) - ref).max()
    assert e1 < 1e-5
    assert 10 < e1 / e2 < 20  # fourth-order stepping
    conv, n = ch.converged_sweep_unitary(left, right, sweep, tol=1e-6)
    assert np.abs(conv - ref).max() < 1e-6 and n > sweep.n_steps


def test_channel_is_trace_preserving_without_projection():
    res = ch.shuttle_chain(ch.ChainConfig(n_dots=6, project_valley=False))
    assert np.allclose(res.ptm.entries[0], [1, 0, 0, 0], atol=1e-9)
    assert np.allclose(res.valley_post_select_probs, 1.0)


def test_chain_is_deterministic_and_starts_maximally_entangled():
    cfg = ch.ChainConfig(n_dots=5, seed=7)
    a, b = ch.shuttle_chain(cfg), ch.shuttle_chain(cfg)
    assert np.array_equal(a.final_state.matrix, b.final_state.matrix)
    assert a.concurrence_trace[0] == pytest.approx(1.0)
    assert len(a.concurrence_trace) == 5 and len(a.valley_post_select_probs) == 4
    assert 0 < a.success_probability <= 1


@pytest.mark.slow
def test_disorder_response_is_monotone():
    means = []
    for sd in (0.0, np.pi / 8, np.pi / 4, np.pi / 2):
        cfg = ch.ChainConfig(n_dots=12, sd_phase=sd)
        res = ch.ensemble(cfg, range(50))
        means.append(np.mean([r.concurrence_trace[-1] for r in res]))
    assert all(a >= b for a, b in zip(means, means[1:])), means


def test_larger_tunnel_coupling_retains_more_entanglement():
    res = {tc: np.mean([r.concurrence_trace[-1] for r in ch.ensemble(ch.ChainConfig(t_c=tc), range(8))])
           for tc in (20.0, 40.0)}
    assert res[40.0] > res[20.0]


def test_threshold_heuristic():
    """Worst single-sweep transfer sits near B = 2|t_vc| in the charge-adiabatic range."""
    dphi = 0.75  # median |delta phi| for site phases with SD pi/4
    tcs = np.arange(12.0, 40.01, 0.5)
    f = [ch.spin_transfer_fidelity(ch.single_dqd_pair(dphi, t_c=tc)[0]) for tc in tcs]
    worst = tcs[int(np.argmin(f))]
    predicted = transfer_threshold_tc(40.0, dphi)
    assert abs(worst - predicted) <= 0.2 * predicted, (worst, predicted)


def test_valley_projection_errors():
    rho = ch._initial(SiteParams(75.0, 0.0))
    # the excited valley of a site with the same phase is orthogonal to this state
    with pytest.raises(NumericalError):
        ch.valley_project(rho, np.pi)


def test_chain_config_errors():
    with pytest.raises(ConfigurationError):
        ch.ChainConfig(n_dots=1)
    with pytest.raises(ConfigurationError):
        ch.ChainConfig(phase_mode="global")
    with pytest.raises(ConfigurationError):
        ch.ChainConfig(sd_phase=-1)


def test_link_mode_draws_phase_differences():
    cfg = ch.ChainConfig(phase_mode="link", seed=3)
    ph = [s.valley_phase for s in cfg.sites()]
    assert ph[0] == 0.0
    sites = ch.ChainConfig(seed=3).sites()
    assert sites[-1].b_x == pytest.approx(1.0) and sites[-1].b_z == pytest.approx(3.0)


def test_purified_pair_probability_is_consistent():
    res = ch.shuttle_chain(ch.ChainConfig(n_dots=6, seed=2), with_ptm=False)
    out, p = ch.purify_shuttled_pair(res.final_state)
    assert 0 < p <= 1
    assert concurrence(out) >= res.concurrence_trace[-1] - 1e-9


def test_valley_readout_connections():
    conn = highlighted_connections()
    assert conn == {"L-d R-d": "(1,1)", "L+d R-d": "(0,2)", "L-u R-d": "(1,1)", "L+u R-d": "(0,2)"}


def test_two_electron_hamiltonian():
    keep, modes = basis_states()
    assert len(keep) == 22
    h = two_electron_hamiltonian(ReadoutParams(), 1000.0)
    assert np.abs(h - h.conj().T).max() < 1e-12
    with pytest.raises(ConfigurationError):
        ReadoutParams(U=-1)


def test_noise_trace_properties():
    a = charge_noise_trace(1, n_processes=50, duration=20.0, dt=0.5)
    b = charge_noise_trace(1, n_processes=50, duration=20.0, dt=0.5)
    c = charge_noise_trace(1, n_processes=50, duration=20.0, dt=0.5, realization=1)
    assert np.array_equal(a.values, b.values) and not np.array_equal(a.values, c.values)
    z = charge_noise_trace(1, n_processes=10, s_1mhz=0.0, duration=5.0, dt=0.5)
    assert not np.any(z.values)
    with pytest.raises(ConfigurationError):
        charge_noise_trace(1, dt=1.0, tau_min=0.5)


def test_process_variance_matches_reference_level():
    taus = np.logspace(0, 3, 200)
    var = process_variance(1e-6, taus)
    s = spectrum_model(np.array([1e6]), taus, var)
    assert s[0] == pytest.approx(1e-6, rel=0.1)


def test_noise_spectrum_at_one_megahertz():
    s = spectrum_at(0, n_realizations=30)
    assert s == pytest.approx(1e-6, rel=0.3)
