"""Spin shuttling through silicon quantum-dot chains."""
from .chain import (
    ChainConfig, ChainResult, charge_noise_effect, converged_sweep_unitary, ensemble,
    purifiable_state, purify_shuttled_pair, relax_and_reinit, shuttle_chain, single_dqd_pair,
    spin_pair_state, spin_transfer_fidelity, sweep_step, sweep_unitary, valley_project,
)
from .hamiltonian import (
    SiteParams, SweepParams, build_shuttle_hamiltonian, dqd_sites, transfer_threshold_tc,
    tunnel_couplings, valley_states,
)
from .noise import charge_noise_trace, estimate_spectrum, spectrum_at
from .readout import ReadoutParams, highlighted_connections, valley_readout_spectrum

__all__ = [n for n in dir() if not n.startswith("_")]
