"""Single-electron spin-valley-orbit Hamiltonian of one shuttling step.

Energies in micro-eV, times in ns. Basis: orbit (L, R) (x) bulk valley (z, zbar)
(x) spin (up, down), optionally (x) stationary spin. The local valley eigenstates
are |-_d> = (|z> - e^{i phi_d}|zbar>)/sqrt2 (ground) and |+_d> with a plus sign.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..qmath import I2, SX, SY, SZ, HilbertSpace, Operator

ELECTRON = HilbertSpace.of(("orbit", 2), ("valley", 2), ("spin", 2))
WITH_STATIONARY = HilbertSpace.of(("orbit", 2), ("valley", 2), ("spin", 2), ("stationary", 2))

V_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |z><zbar|
PROJ_L = np.diag([1.0, 0.0]).astype(complex)
PROJ_R = np.diag([0.0, 1.0]).astype(complex)
TAU_Z_HALF = 0.5 * np.kron(np.kron(SZ, I2), I2)  # d H / d epsilon


@dataclass(frozen=True)
class SiteParams:
    valley_magnitude: float  # |Delta_d|, E_V = 2 |Delta_d|
    valley_phase: float = 0.0
    zeeman: float = 40.0
    b_x: float = 0.0  # transverse offset of this site's field
    b_z: float = 0.0  # longitudinal offset

    def __post_init__(self):
        if not self.valley_magnitude > 0:
            raise ConfigurationError("valley coupling magnitude must be positive", field="valley_magnitude")

    @property
    def delta(self):
        return self.valley_magnitude * np.exp(-1j * self.valley_phase)

    @property
    def field(self):
        return np.array([self.b_x, 0.0, self.zeeman + self.b_z])

    @property
    def valley_splitting(self):
        return 2.0 * self.valley_magnitude


@dataclass(frozen=True)
class SweepParams:
    eps0: float = 800.0
    alpha: float = 300.0  # ueV / ns
    t_c: float = 30.0
    e_soi: float = 1.0
    n_steps: int = 2000

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigurationError("sweep rate must be positive", field="sweep.alpha")
        if self.n_steps < 1:
            raise ConfigurationError("need at least one sub-step", field="sweep.n_steps")

    @property
    def duration(self):
        return 2.0 * self.eps0 / self.alpha

    def detuning(self, t):
        return self.alpha * np.asarray(t) - self.eps0


def dqd_sites(delta_l, delta_r, phi_l=0.0, phi_r=0.0, zeeman=40.0, b_x=0.0, b_z=0.0):
    """Two sites whose field difference (left minus right) is (b_x, 0, b_z)."""
    return (SiteParams(delta_l, phi_l, zeeman, 0.5 * b_x, 0.5 * b_z),
            SiteParams(delta_r, phi_r, zeeman, -0.5 * b_x, -0.5 * b_z))


def _spin_dot(v):
    return v[0] * SX + v[1] * SY + v[2] * SZ


def static_part(left: SiteParams, right: SiteParams, sweep: SweepParams):
    """Everything except the (eps/2) tau_z detuning term, 8x8."""
    b_mean = 0.5 * (left.field + right.field)
    b_diff = left.field - right.field
    omega = np.array([sweep.e_soi, -sweep.e_soi, 0.0])
    h = sweep.t_c * np.kron(np.kron(SX, I2), I2)
    h = h + 0.5 * np.kron(np.kron(I2, I2), _spin_dot(b_mean))
    h = h + 0.5 * np.kron(np.kron(SZ, I2), _spin_dot(b_diff))
    h = h + np.kron(np.kron(SY, I2), _spin_dot(omega))
    for proj, site in ((PROJ_L, left), (PROJ_R, right)):
        hv = site.delta * V_PLUS
        h = h + np.kron(np.kron(proj, hv + hv.conj().T), I2)
    return h


def build_shuttle_hamiltonian(left: SiteParams, right: SiteParams, sweep: SweepParams, eps: float,
                              with_stationary=False) -> Operator:
    h = static_part(left, right, sweep) + eps * TAU_Z_HALF
    if with_stationary:
        # rotating frame of the stationary spin: it contributes nothing
        return Operator(WITH_STATIONARY, np.kron(h, I2))
    return Operator(ELECTRON, h)


def valley_states(phi):
    """Columns (|->, |+>) of a site's valley eigenbasis, in the bulk basis."""
    e = np.exp(1j * phi)
    return np.array([[1.0, 1.0], [-e, e]], dtype=complex) / np.sqrt(2)


def valley_basis_change(phi_from, phi_to):
    """Matrix of the old local valley basis expressed in the new one."""
    return valley_states(phi_to).conj().T @ valley_states(phi_from)


def tunnel_couplings(t_c, delta_phi):
    """Valley-conserving and valley-flipping amplitudes (t_vc, t_vf)."""
    e = np.exp(-1j * delta_phi)
    return 0.5 * t_c * (1 + e), 0.5 * t_c * (1 - e)


def orbital_valley_block(h, left: SiteParams, right: SiteParams):
    """<L,a_L| H |R,b_R> for a, b in (-, +), spin-up component."""
    h = np.asarray(h)
    vl, vr = valley_states(left.valley_phase), valley_states(right.valley_phase)
    up = np.array([1.0, 0.0])
    bra = np.stack([np.kron(np.kron([1.0, 0.0], vl[:, a]), up) for a in range(2)])
    ket = np.stack([np.kron(np.kron([0.0, 1.0], vr[:, b]), up) for b in range(2)])
    return bra.conj() @ h @ ket.T


def transfer_threshold_tc(zeeman, delta_phi):
    """t_c at which 2 |t_vc| equals the Zeeman splitting."""
    c = abs(np.cos(0.5 * delta_phi))
    if c == 0:
        return np.inf
    return zeeman / (2.0 * c)
