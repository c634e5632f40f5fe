"""Bucket-brigade shuttling of one spin of a Bell pair down a dot chain.

The shuttled electron lives in orbit (x) valley (x) spin, with the stationary
partner spin appended last. States are kept in the fixed bulk valley basis, so
moving to the next site needs no basis rotation: only the projector onto the
new site's ground valley changes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .. import kernels
from ..errors import ConfigurationError, InvalidStateError, NumericalError
from ..purification import RoundSpec, NoiseModel, round_outcomes
from ..qmath import (
    I2, PAULIS, DensityMatrix, HilbertSpace, PauliTransferMatrix, _mat, bell_state, concurrence,
)
from ..rng import as_generator
from ..units import HBAR_UEV_NS
from .hamiltonian import (
    PROJ_L, TAU_Z_HALF, WITH_STATIONARY, SiteParams, SweepParams, static_part, valley_states,
)

SPIN_PAIR = HilbertSpace.qubits("shuttled", "stationary")
_KET_L = np.array([1.0, 0.0], dtype=complex)


@dataclass(frozen=True)
class ChainConfig:
    n_dots: int = 25
    B: float = 40.0
    t_c: float = 30.0
    mean_valley: float = 75.0
    sd_valley: float = 10.0
    sd_phase: float = np.pi / 4
    b_x_total: float = 1.0  # field inhomogeneity spread evenly along the chain
    b_z_total: float = 3.0
    e_soi: float = 1.0
    seed: int = 0
    phase_mode: str = "site"  # "site": phases ~ N(0, sd); "link": differences ~ N(0, sd)
    project_valley: bool = True

    def __post_init__(self):
        if self.n_dots < 2:
            raise ConfigurationError("a chain needs at least two dots", field="chain.n_dots")
        if self.phase_mode not in ("link", "site"):
            raise ConfigurationError(f"phase_mode must be 'link' or 'site', got {self.phase_mode!r}",
                                     field="chain.phase_mode")
        if self.sd_phase < 0 or self.sd_valley < 0:
            raise ConfigurationError("standard deviations must be >= 0", field="chain")

    def sites(self) -> list:
        """Per-dot parameters drawn from the seeded disorder model."""
        rng = as_generator(self.seed, "shuttle", "valley")
        n = self.n_dots
        mags = rng.normal(self.mean_valley, self.sd_valley, size=n)
        draws = rng.normal(0.0, 1.0, size=n) * self.sd_phase
        if self.phase_mode == "link":
            phases = np.concatenate([[0.0], np.cumsum(draws[1:])])
        else:
            phases = draws
        # keep magnitudes physical; the draw is far from zero for sane settings
        mags = np.maximum(mags, 1e-3 * max(self.mean_valley, 1.0))
        frac = np.arange(n) / (n - 1)
        return [SiteParams(float(mags[d]), float(phases[d]), self.B,
                           float(frac[d] * self.b_x_total), float(frac[d] * self.b_z_total))
                for d in range(n)]


@dataclass
class ChainResult:
    concurrence_trace: np.ndarray
    final_state: DensityMatrix
    valley_post_select_probs: np.ndarray
    ptm: Optional[PauliTransferMatrix] = None
    sites: list = field(default_factory=list, repr=False)
    spin_states: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if abs(self.concurrence_trace[0] - 1.0) > 1e-9:
            raise InvalidStateError("chain must start from a maximally entangled pair")

    @property
    def success_probability(self):
        return float(np.prod(self.valley_post_select_probs))


# ------------------------------------------------------------------ one sweep


def sweep_unitary(left: SiteParams, right: SiteParams, sweep: SweepParams,
                  noise_trace: Optional[Callable] = None, n_steps: Optional[int] = None):
    """8x8 propagator of one detuning sweep.

    Fourth-order Magnus steps: for a detuning linear in time the two-point
    Gauss-Legendre Magnus expansion equals the midpoint Hamiltonian plus a
    constant commutator correction, so each step is still one exponential.
    A noise offset is added at the midpoints; the correction ignores it.
    """
    n = int(n_steps or sweep.n_steps)
    dt = sweep.duration / n
    h0 = static_part(left, right, sweep)
    comm = TAU_Z_HALF @ h0 - h0 @ TAU_Z_HALF
    h0 = h0 - 1j * sweep.alpha * dt ** 2 / (12.0 * HBAR_UEV_NS) * comm
    t = (np.arange(n) + 0.5) * dt
    eps = sweep.detuning(t)
    if noise_trace is not None:
        eps = eps + np.asarray(noise_trace(t), dtype=float)
    return kernels.sweep_product(h0 / HBAR_UEV_NS, TAU_Z_HALF / HBAR_UEV_NS, eps, dt)


def converged_sweep_unitary(left, right, sweep: SweepParams, tol=1e-8, max_steps=2 ** 17,
                            noise_trace=None):
    """Double the sub-step count until the propagator moves by less than ``tol``."""
    n = sweep.n_steps
    prev = sweep_unitary(left, right, sweep, noise_trace, n)
    while n * 2 <= max_steps:
        n *= 2
        cur = sweep_unitary(left, right, sweep, noise_trace, n)
        if np.max(np.abs(cur - prev)) < tol:
            return cur, n
        prev = cur
    raise NumericalError(f"sweep propagator not converged to {tol:g} within {max_steps} sub-steps")


def _apply_electron(rho, u):
    d_extra = rho.shape[0] // 8
    big = np.kron(u, np.eye(d_extra)) if d_extra > 1 else u
    return big @ rho @ big.conj().T


def sweep_step(state, left: SiteParams, right: SiteParams, sweep: SweepParams,
               noise_trace: Optional[Callable] = None, check_convergence=False, tol=1e-8):
    """Evolve an electron (optionally with partner spin) through one sweep."""
    m = _mat(state)
    if m.shape[0] not in (8, 16):
        raise ConfigurationError(f"shuttle state must be 8 or 16 dimensional, got {m.shape[0]}")
    if check_convergence:
        u, _ = converged_sweep_unitary(left, right, sweep, tol=tol, noise_trace=noise_trace)
    else:
        u = sweep_unitary(left, right, sweep, noise_trace)
    out = _apply_electron(m, u)
    return DensityMatrix(WITH_STATIONARY, out) if isinstance(state, DensityMatrix) and m.shape[0] == 16 else out


# ------------------------------------------------------------------ between sweeps


def _valley_projector(phi, d_extra):
    g = valley_states(phi)[:, 0]
    pv = np.outer(g, g.conj())
    return np.kron(np.kron(np.eye(2), pv), np.eye(2 * d_extra))


def valley_project(state, phi: float, zero_tol=1e-14):
    """Project onto the ground valley of a site with phase ``phi``; renormalize.

    Works for trace-one states; for unnormalized operators (channel inputs)
    use ``valley_project_unnormalized``.
    """
    m = _mat(state)
    p_op = _valley_projector(phi, m.shape[0] // 8)
    out = p_op @ m @ p_op
    prob = float(np.real(np.trace(out)))
    if prob <= zero_tol:
        raise NumericalError("ground-valley branch has zero probability")
    return out / prob, prob


def valley_project_unnormalized(op, phi: float):
    m = _mat(op)
    p_op = _valley_projector(phi, m.shape[0] // 8)
    return p_op @ m @ p_op


def relax_and_reinit(state):
    """Forget the orbital state and put the electron back in the left orbital."""
    m = _mat(state)
    d = m.shape[0]
    inner = m.reshape(2, d // 2, 2, d // 2)
    reduced = inner[0, :, 0, :] + inner[1, :, 1, :]
    return np.kron(PROJ_L, reduced)


def spin_pair_state(state) -> np.ndarray:
    """Shuttled-spin (x) stationary-spin reduced state of a 16-dim state."""
    m = _mat(state).reshape(2, 2, 4, 2, 2, 4)
    return np.einsum("abiabj->ij", m)


def _initial(first: SiteParams, pair=None):
    ground = valley_states(first.valley_phase)[:, 0]
    e = np.kron(_KET_L, ground)
    pair = bell_state(1).amplitudes if pair is None else pair
    psi = np.kron(e, pair)
    return np.outer(psi, psi.conj())


def shuttle_chain(cfg: ChainConfig, sweep: Optional[SweepParams] = None,
                  noise_traces: Optional[list] = None, with_ptm=True) -> ChainResult:
    """Shuttle one spin of |psi+> across the chain and record the entanglement.

    ``noise_traces`` optionally supplies one detuning-offset function per sweep.
    """
    sweep = sweep or SweepParams(t_c=cfg.t_c, e_soi=cfg.e_soi)
    if sweep.t_c != cfg.t_c or sweep.e_soi != cfg.e_soi:
        sweep = replace(sweep, t_c=cfg.t_c, e_soi=cfg.e_soi)
    sites = cfg.sites()
    rho = _initial(sites[0])
    n_links = cfg.n_dots - 1
    if noise_traces is not None and len(noise_traces) < n_links:
        raise ConfigurationError("need one noise trace per sweep", field="noise")

    # channel inputs: the shuttled spin alone, one Pauli per run
    g0 = np.kron(_KET_L, valley_states(sites[0].valley_phase)[:, 0])
    e0 = np.outer(g0, g0.conj())
    chan = [np.kron(e0, p) for p in PAULIS] if with_ptm else []

    conc = [concurrence(spin_pair_state(rho))]
    probs = []
    spins = [spin_pair_state(rho)]
    for k in range(n_links):
        left, right = sites[k], sites[k + 1]
        u = sweep_unitary(left, right, sweep, None if noise_traces is None else noise_traces[k])
        rho = _apply_electron(rho, u)
        chan = [u @ c @ u.conj().T for c in chan]
        if cfg.project_valley:
            rho, p = valley_project(rho, right.valley_phase)
            chan = [valley_project_unnormalized(c, right.valley_phase) for c in chan]
        else:
            p = 1.0
        probs.append(p)
        rho = relax_and_reinit(rho)
        chan = [relax_and_reinit(c) for c in chan]
        s = spin_pair_state(rho)
        spins.append(s)
        conc.append(concurrence(s))

    final = spins[-1]
    final = 0.5 * (final + final.conj().T)
    ptm = None
    if with_ptm:
        outs = [np.einsum("aiaj->ij", c.reshape(4, 2, 4, 2)) for c in chan]
        r = np.array([[0.5 * np.real(np.trace(pi @ o)) for o in outs] for pi in PAULIS])
        ptm = PauliTransferMatrix(r / r[0, 0])
    return ChainResult(np.array(conc), DensityMatrix(SPIN_PAIR, final / np.trace(final).real),
                       np.array(probs), ptm, sites, spins)


# ------------------------------------------------------------------ purification


def purify_shuttled_pair(rho, outcome=(1, 1), noise: Optional[NoiseModel] = None):
    """One ideal bit-parity round on two copies, kept only on ``outcome``.

    Returns (normalized kept state, probability of that outcome). The input is
    used as given, so an operator with trace below one yields the joint
    probability including its own missing weight.
    """
    blocks = round_outcomes(rho, rho, RoundSpec("bit"), noise or NoiseModel.ideal())
    kept = blocks[tuple(outcome)]
    p = float(np.real(np.trace(kept)))
    if p <= 1e-15:
        raise NumericalError(f"outcome {outcome} never occurs")
    out = kept / p
    return DensityMatrix(SPIN_PAIR, 0.5 * (out + out.conj().T)), p


def purifiable_state(eps: float, phi: float):
    """(1-eps)|psi'><psi'| + eps|dd><dd| with psi' = sqrt(1/2-eps)|ud> + e^{-i phi} sqrt(1/2)|du>.

    Returned exactly as written (its trace is 1 - eps^2 + ... , not one).
    """
    if not 0 <= eps <= 0.5:
        raise ConfigurationError("eps must lie in [0, 1/2]")
    psi = np.array([0, np.sqrt(0.5 - eps), np.exp(-1j * phi) * np.sqrt(0.5), 0])
    return (1 - eps) * np.outer(psi, psi.conj()) + eps * np.diag([0, 0, 0, 1.0]).astype(complex)


def spin_transfer_fidelity(rho) -> float:
    """Overlap with |psi+> maximized over a relative z phase (deterministic phases are free)."""
    m = _mat(rho)
    return float(np.real(0.5 * m[1, 1] + 0.5 * m[2, 2]) + abs(m[1, 2]))


def ensemble(cfg: ChainConfig, seeds, sweep=None, with_ptm=False):
    """Run the chain once per seed."""
    return [shuttle_chain(replace(cfg, seed=int(s)), sweep, with_ptm=with_ptm) for s in seeds]


# ------------------------------------------------------------------ charge noise


def chain_noise_traces(seed, n_sweeps: int, sweep: SweepParams, realization=0, **kw):
    """Consecutive windows of one continuous noise realization, one per sweep."""
    from .noise import charge_noise_trace

    trace = charge_noise_trace(seed, duration=n_sweeps * sweep.duration, realization=realization, **kw)
    return [trace.shifted(k * sweep.duration) for k in range(n_sweeps)]


def single_dqd_pair(delta_phi, t_c=20.0, valley_magnitude=75.0, zeeman=40.0, b_x=1.0, b_z=1.0,
                    e_soi=1.0, noise_trace=None, sweep: Optional[SweepParams] = None):
    """Spin-pair state after one valley-projected sweep across a single DQD."""
    from .hamiltonian import dqd_sites

    left, right = dqd_sites(valley_magnitude, valley_magnitude, float(delta_phi), 0.0, zeeman, b_x, b_z)
    sweep = replace(sweep or SweepParams(), t_c=t_c, e_soi=e_soi)
    rho = _initial(left)
    rho = _apply_electron(rho, sweep_unitary(left, right, sweep, noise_trace))
    rho, p = valley_project(rho, right.valley_phase)
    s = spin_pair_state(relax_and_reinit(rho))
    return 0.5 * (s + s.conj().T), p


def charge_noise_effect(delta_phis, n_realizations=100, seed=0, s_1mhz=1e-6, **dqd):
    """Noiseless and realization-averaged noisy concurrences (raw and purified) per delta_phi.

    Returns a dict of arrays with keys raw, raw_noisy, purified, purified_noisy.
    """
    sweep = replace(SweepParams(), **{k: dqd.pop(k) for k in ("eps0", "alpha", "n_steps") if k in dqd})
    out = {k: [] for k in ("raw", "raw_noisy", "purified", "purified_noisy")}
    for j, dphi in enumerate(np.atleast_1d(delta_phis)):
        s0, _ = single_dqd_pair(dphi, sweep=sweep, **dqd)
        out["raw"].append(concurrence(s0))
        out["purified"].append(concurrence(purify_shuttled_pair(s0)[0]))
        raw_n, pur_n = [], []
        for k in range(n_realizations):
            from .noise import charge_noise_trace

            tr = charge_noise_trace(seed, s_1mhz=s_1mhz, duration=sweep.duration, realization=(j, k))
            s, _ = single_dqd_pair(dphi, sweep=sweep, noise_trace=tr, **dqd)
            raw_n.append(concurrence(s))
            pur_n.append(concurrence(purify_shuttled_pair(s)[0]))
        out["raw_noisy"].append(np.mean(raw_n))
        out["purified_noisy"].append(np.mean(pur_n))
    return {k: np.array(v) for k, v in out.items()}
