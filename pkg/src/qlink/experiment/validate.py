"""Fast invariant checks run by ``qlink validate``; each returns (passed, detail)."""
from __future__ import annotations

import numpy as np

from .. import cavity, esd, lindblad
from ..qmath import concurrence, random_density_matrix, random_unitary
from ..shuttle.chain import purifiable_state, purify_shuttled_pair
from ..shuttle.hamiltonian import (
    SiteParams, SweepParams, orbital_valley_block, static_part, tunnel_couplings,
)
from .config import load_config


def _small_cavity():
    params = cavity.OptimizableParameters.table3().replace(t_stop=5.0)
    c = cavity.CavityParams(fock_cutoff=3)
    return params, c


def check_lindblad_state_bounds():
    params, c = _small_cavity()
    rhos = cavity._evolve_system(params, c, np.linspace(0.5, 5.0, 10))
    worst = [0.0, 0.0, 0.0]
    for r in rhos:
        worst[0] = max(worst[0], abs(np.trace(r) - 1))
        worst[1] = max(worst[1], np.abs(r - r.conj().T).max())
        worst[2] = max(worst[2], -np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min())
    ok = worst[0] <= 1e-9 and worst[1] <= 1e-9 and worst[2] <= 1e-7
    return bool(ok), f"trace {worst[0]:.1e}, hermiticity {worst[1]:.1e}, negativity {worst[2]:.1e}"


def check_backend_agreement():
    params, c = _small_cavity()
    ts = np.array([1.0, 3.0, 5.0])
    a = cavity._evolve_system(params, c, ts, "direct")
    b = cavity._evolve_system(params, c, ts, "propagator")
    d = float(np.abs(a - b).max())
    return d <= 1e-6, f"max |direct - propagator| = {d:.1e}"


def check_tunnel_identities():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10):
        t_c, pl, pr = rng.uniform(5, 50), rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi, np.pi)
        left, right = SiteParams(70.0, pl), SiteParams(80.0, pr)
        block = orbital_valley_block(static_part(left, right, SweepParams(t_c=t_c, e_soi=0.0)), left, right)
        vc, vf = tunnel_couplings(t_c, pl - pr)
        worst = max(worst, abs(abs(block[0, 0]) - abs(vc)), abs(abs(block[0, 1]) - abs(vf)),
                    abs(abs(vc) ** 2 + abs(vf) ** 2 - t_c ** 2))
    return bool(worst <= 1e-12), f"max deviation {worst:.1e}"


def check_concurrence_invariance():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        rho = random_density_matrix(4, rng)
        u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
        worst = max(worst, abs(concurrence(rho) - concurrence(u @ rho @ u.conj().T)))
    return worst <= 1e-9, f"max change {worst:.1e}"


def check_teleportation_identity():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        w = rng.dirichlet(np.ones(4))
        worst = max(worst, float(np.abs(esd.teleportation_ptm(w).entries - esd.pauli_channel_ptm(w).entries).max()))
    return worst <= 1e-10, f"max PTM deviation {worst:.1e}"


def check_purifiable_state():
    worst = 0.0
    for eps in (0.0, 0.1, 0.2, 0.3, 0.45):
        for phi in (0.0, 1.3):
            out, p = purify_shuttled_pair(purifiable_state(eps, phi))
            worst = max(worst, abs(p - (1 - eps) ** 2 * (0.5 - eps)),
                        abs(1 - np.real(np.array([0, 1, 1, 0]) @ out.matrix @ np.array([0, 1, 1, 0])) / 2))
    return worst <= 1e-10, f"max deviation {worst:.1e}"


def check_config_hash():
    a, b = load_config(env={}), load_config(env={})
    c = load_config(env={}, overrides={"run": {"master_seed": 1}})
    return a.hash() == b.hash() != c.hash(), a.hash()


CHECKS = {
    "lindblad state bounds": check_lindblad_state_bounds,
    "backend agreement": check_backend_agreement,
    "tunnel coupling identities": check_tunnel_identities,
    "concurrence local-unitary invariance": check_concurrence_invariance,
    "teleportation equals Pauli channel": check_teleportation_identity,
    "purifiable state closed form": check_purifiable_state,
    "config hash determinism": check_config_hash,
}


def run_checks():
    return [(name, *fn()) for name, fn in CHECKS.items()]
