"""Error suppression by derangement (virtual distillation) on a spin-ring VQE.

The estimator Tr[rho^n H] / Tr[rho^n] is evaluated two ways: directly from
density matrices ("formula level"), and for n = 2 by simulating the ancilla
controlled-SWAP circuit on 1 + 2N qubits with noisy gates and with the second
copy teleported through imperfect Bell pairs.

Qubit 0 is the most significant bit throughout.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .errors import ConfigurationError, DimensionError, NumericalError
from .qmath import I2, PAULIS, SX, SY, SZ, PauliTransferMatrix, _mat, bell_state
from .rng import as_generator

_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _cswap():
    u = np.eye(8, dtype=complex)
    u[4:, 4:] = _SWAP
    return u


CSWAP = _cswap()


# ------------------------------------------------------------------ Hamiltonian


@dataclass(frozen=True)
class SpinRingHamiltonian:
    """H = sum_k omega_k Z_k + J sum_ring sigma_k . sigma_{k+1}."""
    n: int
    omega: tuple
    J: float = 0.1

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("a ring needs at least two spins", field="esd.n")
        om = tuple(float(w) for w in self.omega)
        if len(om) != self.n:
            raise ConfigurationError("one field per spin is required", field="esd.omega")
        object.__setattr__(self, "omega", om)

    @classmethod
    def random(cls, n=6, J=0.1, seed=0):
        rng = as_generator(seed, "esd", "omega")
        return cls(n, tuple(rng.uniform(-1.0, 1.0, size=n)), J)

    @property
    def edges(self):
        return [(k, (k + 1) % self.n) for k in range(self.n)]

    @property
    def dim(self):
        return 2 ** self.n

    def diagonal_energies(self):
        """Diagonal of H0 = sum_k omega_k Z_k over computational basis states."""
        idx = np.arange(self.dim)
        bits = (idx[:, None] >> (self.n - 1 - np.arange(self.n))[None, :]) & 1
        return (1 - 2 * bits) @ np.array(self.omega)

    def coupling_matrix(self):
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for a, b in self.edges:
            for p in (SX, SY, SZ):
                ops = [I2] * self.n
                ops[a] = p
                ops[b] = p
                m = ops[0]
                for o in ops[1:]:
                    m = np.kron(m, o)
                h += self.J * m
        return h

    def matrix(self):
        return np.diag(self.diagonal_energies()).astype(complex) + self.coupling_matrix()

    def ground_energy(self):
        return float(np.linalg.eigvalsh(self.matrix())[0])

    def initial_bits(self):
        """Ground state of H0: spin down (bit 1) wherever omega_k > 0."""
        return tuple(int(w > 0) for w in self.omega)


@dataclass(frozen=True)
class VhaParams:
    beta: tuple
    gamma: tuple

    def __post_init__(self):
        b, g = tuple(map(float, self.beta)), tuple(map(float, self.gamma))
        if len(b) != len(g):
            raise ConfigurationError("beta and gamma need one entry per layer", field="esd.vha")
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "gamma", g)

    @property
    def layers(self):
        return len(self.beta)

    def vector(self):
        return np.concatenate([self.gamma, self.beta])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        half = x.size // 2
        return cls(tuple(x[half:]), tuple(x[:half]))


def gate_counts(h: SpinRingHamiltonian, layers: int):
    """(two-qubit, single-qubit) gate applications of the prepared circuit."""
    return 3 * len(h.edges) * layers, h.n * layers + h.n


@dataclass(frozen=True)
class GateNoise:
    """Depolarizing probability after each gate; single-qubit gates 5x cleaner."""
    depol_2q: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.depol_2q <= 1.0:
            raise ConfigurationError("depolarizing probability must lie in [0, 1]", field="esd.depol_2q")

    @property
    def depol_1q(self):
        return self.depol_2q / 5.0

    @classmethod
    def from_xi(cls, xi, h: SpinRingHamiltonian, layers: int):
        """Gate noise whose expected error count over the preparation circuit is xi."""
        n2, n1 = gate_counts(h, layers)
        return cls(xi / (n2 + n1 / 5.0))

    def xi(self, h: SpinRingHamiltonian, layers: int):
        n2, n1 = gate_counts(h, layers)
        return n2 * self.depol_2q + n1 * self.depol_1q


# ------------------------------------------------------------------ state preparation


def _edge_unitary(theta):
    """exp(-i theta sigma.sigma) on two qubits."""
    return np.exp(1j * theta) * (np.cos(2 * theta) * np.eye(4) - 1j * np.sin(2 * theta) * _SWAP)


def _pair_rotation(p, theta):
    """exp(-i theta p (x) p) for a Pauli p."""
    pp = np.kron(p, p)
    return np.cos(theta) * np.eye(4) - 1j * np.sin(theta) * pp


def _basis_ket(bits):
    n = len(bits)
    psi = np.zeros(2 ** n, dtype=complex)
    psi[int("".join(map(str, bits)), 2) if n else 0] = 1.0
    return psi


def vha_statevector(h: SpinRingHamiltonian, p: VhaParams):
    """Noiseless ansatz state: layers of edge-wise exp(-i gamma H1) then exp(-i beta H0)."""
    n = h.n
    psi = _basis_ket(h.initial_bits()).reshape((2,) * n)
    diag = h.diagonal_energies().reshape((2,) * n)
    for g, b in zip(p.gamma, p.beta):
        theta = g * h.J
        c, s, ph = np.cos(2 * theta), np.sin(2 * theta), np.exp(1j * theta)
        for a, q in h.edges:
            psi = ph * (c * psi - 1j * s * np.swapaxes(psi, a, q))
        psi = psi * np.exp(-1j * b * diag)
    return psi.reshape(-1)


def vha_prepare(h: SpinRingHamiltonian, p: VhaParams, noise: GateNoise = GateNoise()):
    """Density matrix from the gate-level ansatz circuit with depolarizing noise.

    Each edge term is three commuting two-qubit rotations (XX, YY, ZZ), each
    followed by two-qubit depolarization; the field layer is one Z rotation
    per qubit; the initial basis state costs one single-qubit gate per qubit.
    """
    n = h.n
    p1, p2 = noise.depol_1q, noise.depol_2q
    rho = np.zeros((h.dim, h.dim), dtype=complex)
    rho[0, 0] = 1.0
    for q, bit in enumerate(h.initial_bits()):
        rho = kernels.apply_unitary(rho, SX if bit else I2, [q], n)
        rho = kernels.depolarize(rho, p1, [q], n)
    for g, b in zip(p.gamma, p.beta):
        theta = g * h.J
        for a, q in h.edges:
            for pauli in (SX, SY, SZ):
                rho = kernels.apply_unitary(rho, _pair_rotation(pauli, theta), [a, q], n)
                rho = kernels.depolarize(rho, p2, [a, q], n)
        for q, w in enumerate(h.omega):
            rz = np.diag([np.exp(-1j * b * w), np.exp(1j * b * w)])
            rho = kernels.apply_unitary(rho, rz, [q], n)
            rho = kernels.depolarize(rho, p1, [q], n)
    return rho


def vha_energy(h: SpinRingHamiltonian, p: VhaParams, hmat=None):
    psi = vha_statevector(h, p)
    hmat = h.matrix() if hmat is None else hmat
    return float(np.real(psi.conj() @ hmat @ psi))


@dataclass
class VhaOptimization:
    params: VhaParams
    energy: float
    exact: float
    iterations: int
    restarts: int
    converged: bool

    @property
    def error(self):
        return abs(self.energy - self.exact)


def optimize_vha(h: SpinRingHamiltonian, layers=20, tolerance=1e-4, seed=0, max_restarts=8,
                 initial: Optional[VhaParams] = None, maxiter=3000) -> VhaOptimization:
    """Minimize the noiseless ansatz energy with L-BFGS-B and central-difference gradients.

    Restarts from seeded random points until the error drops below
    ``tolerance``; on failure the best point is returned with a warning.
    """
    hmat = h.matrix()
    exact = h.ground_energy()
    if layers == 0:
        p = VhaParams((), ())
        return VhaOptimization(p, vha_energy(h, p, hmat), exact, 0, 0, abs(vha_energy(h, p, hmat) - exact) <= tolerance)

    def f(x):
        return vha_energy(h, VhaParams.from_vector(x), hmat)

    def grad(x, step=1e-6):
        g = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = step
            g[i] = (f(x + e) - f(x - e)) / (2 * step)
        return g

    rng = as_generator(seed, "esd", "vha-start")
    best = None
    total_it = 0
    for attempt in range(max_restarts):
        if attempt == 0 and initial is not None:
            x0 = initial.vector()
        else:
            # a slow ramp from H0 towards H1 is a sensible adiabatic-like start
            ramp = (np.arange(layers) + 0.5) / layers
            x0 = np.concatenate([ramp * 1.5 / max(h.J, 1e-12) * 0.5, (1 - ramp) * 0.5])
            x0 = x0 + rng.normal(0, 0.05, size=x0.size) * (attempt > 0)
        res = minimize(f, x0, jac=grad, method="L-BFGS-B",
                       options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-10})
        total_it += int(res.nit)
        if best is None or res.fun < best[0]:
            best = (float(res.fun), res.x)
        if best[0] - exact <= tolerance:
            break
    params = VhaParams.from_vector(best[1])
    out = VhaOptimization(params, best[0], exact, total_it, attempt + 1, best[0] - exact <= tolerance)
    if not out.converged:
        warnings.warn(f"VHA energy error {out.error:.2e} above tolerance {tolerance:.0e}", RuntimeWarning)
    return out


# ------------------------------------------------------------------ teleportation


def bell_depolarizing_probability(f):
    """Kernel depolarizing probability equivalent to a Werner resource of fidelity f."""
    if not 0 < f <= 1:
        raise ConfigurationError(f"Bell fidelity {f} outside (0, 1]", field="esd.bell_fidelity")
    return 4.0 * (1.0 - f) / 3.0


def teleport_noise(rho, qubits: Sequence[int], f: float):
    """Pauli channel f rho + (1-f)/3 sum_k s_k rho s_k on each listed qubit.

    This is what teleporting through a twirled Bell pair of fidelity f does.
    """
    m = np.array(_mat(rho), dtype=complex)
    n = int(round(np.log2(m.shape[0])))
    p = bell_depolarizing_probability(f)
    for q in qubits:
        if not 0 <= q < n:
            raise DimensionError(f"qubit {q} outside a {n}-qubit register")
        m = kernels.depolarize(m, p, [q], n)
    return m


def no_error_weight(f, n_qubits):
    return float(f) ** int(n_qubits)


_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def teleport(rho_in, resource):
    """Teleport qubit 0 through the two-qubit resource on (1, 2), averaging all outcomes.

    Corrections X^{m1} Z^{m0} are applied to qubit 2 for the standard Phi+
    protocol; the returned single-qubit state is the channel output.
    """
    rho = np.kron(_mat(rho_in), _mat(resource)).astype(complex)
    rho = kernels.apply_unitary(rho, _CNOT, [0, 1], 3)
    rho = kernels.apply_unitary(rho, _H, [0], 3)
    out = np.zeros((2, 2), dtype=complex)
    r = rho.reshape(2, 2, 2, 2, 2, 2)
    for m0 in range(2):
        for m1 in range(2):
            branch = r[m0, m1, :, m0, m1, :]
            corr = np.linalg.matrix_power(SZ, m0) @ np.linalg.matrix_power(SX, m1)
            out += corr @ branch @ corr.conj().T
    return out


@dataclass
class TeleportationReport:
    alpha: int
    max_distance: float
    n_states: int


def teleportation_identity(alpha: int, states: Sequence[np.ndarray]) -> TeleportationReport:
    """Check that resource Phi_alpha teleports |psi> to sigma_alpha |psi> (up to a phase)."""
    res = bell_state(alpha).amplitudes
    res_dm = np.outer(res, res.conj())
    worst = 0.0
    for psi in states:
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        out = teleport(np.outer(psi, psi.conj()), res_dm)
        want = PAULIS[alpha] @ psi
        worst = max(worst, float(np.max(np.abs(out - np.outer(want, want.conj())))))
    return TeleportationReport(alpha, worst, len(states))


def teleportation_ptm(weights):
    """PTM of teleportation through the Bell mixture sum_a w_a |Phi_a><Phi_a|."""
    res = sum(w * np.outer(bell_state(a).amplitudes, bell_state(a).amplitudes.conj())
              for a, w in enumerate(weights))
    r = np.array([[0.5 * np.real(np.trace(pi @ teleport(pj, res))) for pj in PAULIS]
                  for pi in PAULIS])
    return PauliTransferMatrix(r)


def pauli_channel_ptm(weights):
    """Closed form: diag(1, w0+w1-w2-w3, w0-w1+w2-w3, w0-w1-w2+w3)."""
    w0, w1, w2, w3 = weights
    return PauliTransferMatrix(np.diag([w0 + w1 + w2 + w3, w0 + w1 - w2 - w3,
                                        w0 - w1 + w2 - w3, w0 - w1 - w2 + w3]))


# ------------------------------------------------------------------ estimators


def mitigated_expectation(copies: Sequence, sigma, tol=1e-12) -> float:
    """Tr[sigma rho_1 ... rho_n] / Tr[rho_1 ... rho_n], sigma averaged over cyclic placements."""
    mats = [np.asarray(_mat(c), dtype=complex) for c in copies]
    if len(mats) < 2:
        raise ConfigurationError("need at least two copies", field="esd.n_copies")
    d = mats[0].shape
    if any(m.shape != d for m in mats):
        raise DimensionError("copies have different dimensions")
    s = np.asarray(_mat(sigma), dtype=complex)
    n = len(mats)
    num = 0.0
    den = None
    for k in range(n):
        order = mats[k:] + mats[:k]
        prod = order[0]
        for m in order[1:]:
            prod = prod @ m
        num += np.trace(s @ prod)
        if den is None:
            den = np.trace(prod)
    num /= n
    if abs(den) < tol:
        raise NumericalError("Tr[rho^n] vanishes; the estimator is undefined")
    return float(np.real(num / den))


def _zh_expectation(rho, hmat):
    """(<Z_anc (x) H>, <Z_anc>) for an ancilla-first register."""
    d = hmat.shape[0]
    r = rho.reshape(2, d, 2, d)
    r00, r11 = r[0, :, 0, :], r[1, :, 1, :]
    zh = np.real(np.trace(hmat @ r00) - np.trace(hmat @ r11))
    z = np.real(np.trace(r00) - np.trace(r11))
    return float(zh), float(z)


@dataclass
class DerangementEstimate:
    value: float
    z_ancilla: float
    zh_ancilla: float
    shots: Optional[int] = None


# two-qubit gate supports of one controlled-SWAP built from entangling gates, in
# roles (anc, a, b); each gets a depolarizing event after the exact cSWAP
CSWAP_NOISE_PAIRS = (("a", "b"), ("anc", "a"), ("a", "b"), ("anc", "a"), ("anc", "b"))


def derangement_circuit_estimate(copies: Sequence, sigma, noise: GateNoise = GateNoise(), bell_f=1.0,
                                 shots: Optional[int] = None, seed=0,
                                 noise_pairs=CSWAP_NOISE_PAIRS) -> DerangementEstimate:
    """Hadamard-test estimate of Tr[rho^2 sigma]/Tr[rho^2] from the full n = 2 circuit.

    Register: ancilla, copy 1 (N qubits), copy 2 (N qubits). The second copy
    arrives through teleportation, i.e. a Pauli channel per qubit. Each
    controlled-SWAP is exact but followed by five two-qubit depolarizing
    events on the pairs it would use when built from two-qubit gates.
    Copy-2 qubits are traced out as soon as their last gate is done.
    """
    if len(copies) != 2:
        raise ConfigurationError("the circuit estimator handles exactly two copies", field="esd.n_copies")
    r1, r2 = (np.asarray(_mat(c), dtype=complex) for c in copies)
    if r1.shape != r2.shape:
        raise DimensionError("copies have different dimensions")
    hmat = np.asarray(_mat(sigma), dtype=complex)
    if hmat.shape != r1.shape:
        raise DimensionError("observable and copies differ in dimension")
    n = int(round(np.log2(r1.shape[0])))
    if bell_f < 1:
        r2 = teleport_noise(r2, range(n), bell_f)
    p1, p2 = noise.depol_1q, noise.depol_2q

    anc = np.array([[1, 0], [0, 0]], dtype=complex)
    rho = np.kron(anc, np.kron(r1, r2))
    del r2
    total = 1 + 2 * n
    rho = kernels.apply_unitary(rho, _H, [0], total)
    rho = kernels.depolarize(rho, p1, [0], total)
    for k in range(n):
        # copy-2 qubits already traced out shift the register: qubit b of pair k sits at 1 + n
        a, b = 1 + k, 1 + n
        rho = kernels.apply_unitary(rho, CSWAP, [0, a, b], total)
        role = {"anc": 0, "a": a, "b": b}
        for pair in noise_pairs:
            rho = kernels.depolarize(rho, p2, [role[x] for x in pair], total)
        rho = kernels.partial_trace(rho, [b], total)
        total -= 1
    rho = kernels.apply_unitary(rho, _H, [0], total)
    rho = kernels.depolarize(rho, p1, [0], total)
    zh, z = _zh_expectation(rho, hmat)
    if shots:
        # sample the ancilla outcome and the observable's eigenbasis jointly
        rng = as_generator(seed, "esd", "shots")
        d = hmat.shape[0]
        w, v = np.linalg.eigh(hmat)
        r = rho.reshape(2, d, 2, d)
        probs = np.concatenate([np.real(np.einsum("ij,ik,kj->j", v.conj(), r[s, :, s, :], v))
                                for s in range(2)])
        probs = np.clip(probs, 0, None)
        counts = rng.multinomial(shots, probs / probs.sum())
        signs = np.concatenate([np.ones(d), -np.ones(d)])
        zh = float(np.sum(counts * signs * np.concatenate([w, w])) / shots)
        z = float(np.sum(counts * signs) / shots)
    if abs(z) < 1e-12:
        raise NumericalError("ancilla expectation vanishes")
    return DerangementEstimate(zh / z, z, zh, shots)


# ------------------------------------------------------------------ sweep


@dataclass
class MitigationResult:
    mode: str
    circuit_error_rate: float
    bell_fidelity: float
    n_copies: int
    unmitigated_energy: float
    mitigated_energy: float
    exact_energy: float

    @property
    def unmitigated_error(self):
        return abs(self.unmitigated_energy - self.exact_energy)

    @property
    def mitigated_error(self):
        return abs(self.mitigated_energy - self.exact_energy)


MODES = ("unmitigated", "ideal", "noisy-derangement", "noisy-bell", "both")


def energy_error_sweep(h: SpinRingHamiltonian, params: VhaParams, xis, modes=MODES, bell_f=0.995,
                       n_copies=(2, 3, 4)) -> list:
    """Energy errors per mode and xi.

    ``ideal`` is formula level for every n in ``n_copies``; the noisy modes are
    n = 2: ``noisy-bell`` is formula level with the teleported copy depolarized,
    ``noisy-derangement`` and ``both`` run the full circuit.
    """
    unknown = set(modes) - set(MODES)
    if unknown:
        raise ConfigurationError(f"unknown modes {sorted(unknown)}", field="esd.modes")
    hmat = h.matrix()
    exact = h.ground_energy()
    rows = []
    for xi in xis:
        noise = GateNoise.from_xi(xi, h, params.layers)
        rho = vha_prepare(h, params, noise)
        raw = float(np.real(np.trace(rho @ hmat)))
        for mode in modes:
            if mode == "unmitigated":
                rows.append(MitigationResult(mode, xi, 1.0, 1, raw, raw, exact))
            elif mode == "ideal":
                for n in n_copies:
                    est = mitigated_expectation([rho] * n, hmat)
                    rows.append(MitigationResult(mode, xi, 1.0, n, raw, est, exact))
            elif mode == "noisy-bell":
                noisy = teleport_noise(rho, range(h.n), bell_f)
                est = mitigated_expectation([rho, noisy], hmat)
                rows.append(MitigationResult(mode, xi, bell_f, 2, raw, est, exact))
            else:
                f = bell_f if mode == "both" else 1.0
                est = derangement_circuit_estimate([rho, rho], hmat, noise, f).value
                rows.append(MitigationResult(mode, xi, f, 2, raw, est, exact))
    return rows
