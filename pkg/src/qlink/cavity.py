"""Raw Bell pairs between two distant double quantum dots sharing one resonator.

Frequencies are in MHz (used as angular rates, see ``units``), times in ns,
Lindblad rates in 1/us. Per-DQD basis is charge (L, R) (x) spin (up, down).
"""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.optimize import minimize

from . import units
from .errors import ConfigurationError, NumericalError
from .lindblad import LindbladTerm, evolve_arrays
from .qmath import (
    I2, PSI_MINUS, SX, SY, SZ, DensityMatrix, HilbertSpace, Operator, concurrence, fidelity_to_pure,
)

SCALE = 1e-3  # MHz * ns -> rad
DQD_SPACE = HilbertSpace.of(("charge", 2), ("spin", 2))
SPIN_PAIR = HilbertSpace.qubits("spin1", "spin2")
ACCEPTED = ((0, 1), (1, 0))  # (charge1, charge2) = LR, RL


def _kron(*ms):
    return reduce(np.kron, ms)


@dataclass(frozen=True)
class DqdParams:
    detuning: float = 0.0
    tunnel_coupling: float = 5e3
    zeeman: float = 1e4
    field_gradient: tuple = (0.0, 0.0, 0.0)
    charge_cavity_coupling: float = 0.0

    @classmethod
    def resonant(cls, omega_r, b_x, g_c, detuning=0.0, b_z=0.0):
        """B = omega_r and 2 t_c = B."""
        return cls(detuning, omega_r / 2, omega_r, (b_x, 0.0, b_z), g_c)


@dataclass(frozen=True)
class CavityParams:
    resonator_frequency: float = 1e4
    fock_cutoff: int = 7
    cavity_loss: float = 1.0  # 1/us
    T2_spin: float = 120e3  # ns
    T2_charge: float = 400.0  # ns

    def __post_init__(self):
        if self.fock_cutoff < 2:
            raise ConfigurationError("fock_cutoff must be >= 2", field="cavity.fock_cutoff")
        if self.cavity_loss < 0:
            raise ConfigurationError("cavity_loss must be >= 0", field="cavity.cavity_loss")
        for name in ("T2_spin", "T2_charge"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigurationError(f"{name} must be positive", field=f"cavity.{name}")

    def noiseless(self):
        return dataclasses.replace(self, cavity_loss=0.0, T2_spin=float("inf"), T2_charge=float("inf"))

    @property
    def is_noiseless(self):
        return (self.cavity_loss == 0 and units.dephasing_rate(self.T2_spin) == 0
                and units.dephasing_rate(self.T2_charge) == 0)


def _default_electron():
    # (|L> - |R>)/sqrt2 (x) |up>
    return (np.kron([1.0, -1.0], [1.0, 0.0]) / np.sqrt(2)).astype(complex)


@dataclass(frozen=True)
class OptimizableParameters:
    b_x: tuple = (526.0, 174.0)
    g_c: tuple = (390.0, 140.0)
    detuning: tuple = (0.0, 0.0)
    zeeman: float = 1e4
    omega_r: float = 1e4
    t_c: float = 5e3
    psi1: np.ndarray = field(default_factory=_default_electron, repr=False)
    psi2: np.ndarray = field(default_factory=_default_electron, repr=False)
    t_stop: float = 15.0

    def __post_init__(self):
        for name in ("psi1", "psi2"):
            v = np.asarray(getattr(self, name), dtype=complex).reshape(-1)
            if v.shape != (4,):
                raise ConfigurationError("initial electron state needs 4 amplitudes", field=name)
            n = np.linalg.norm(v)
            if n == 0:
                raise ConfigurationError("initial electron state is zero", field=name)
            v = v / n
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        for name in ("b_x", "g_c", "detuning"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        self.check_constraints()

    @classmethod
    def table3(cls):
        return cls()

    def check_constraints(self, tol=1e-9):
        scale = max(abs(self.omega_r), 1.0)
        if abs(self.zeeman - self.omega_r) > tol * scale:
            raise ConfigurationError("resonance requires B = omega_r", field="zeeman")
        if abs(2 * self.t_c - self.zeeman) > tol * scale:
            raise ConfigurationError("resonance requires 2 t_c = B", field="t_c")
        if self.t_stop <= 0:
            raise ConfigurationError("stopping time must be positive", field="t_stop")

    def dqd(self, i) -> DqdParams:
        return DqdParams(self.detuning[i], self.t_c, self.zeeman, (self.b_x[i], 0.0, 0.0), self.g_c[i])

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class RawBellResult:
    spin_state: DensityMatrix
    success_probability: float
    fidelity: float
    concurrence: float
    vacuum_probability: float
    attempt_time: float
    branch_probabilities: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("success_probability", "fidelity", "vacuum_probability"):
            v = getattr(self, name)
            if not -1e-9 <= v <= 1 + 1e-9:
                raise NumericalError(f"{name}={v} outside [0, 1]")


# ------------------------------------------------------------------ Hamiltonians


def build_dqd_hamiltonian(p: DqdParams) -> Operator:
    bx, by, bz = p.field_gradient
    bs = bx * SX + by * SY + bz * SZ
    h = (0.5 * p.detuning * np.kron(SZ, I2) + p.tunnel_coupling * np.kron(SX, I2)
         + 0.5 * p.zeeman * np.kron(I2, SZ) + 0.5 * np.kron(SZ, bs))
    return Operator(DQD_SPACE, h)


def system_space(fock_cutoff):
    return HilbertSpace.of(("charge1", 2), ("spin1", 2), ("charge2", 2), ("spin2", 2), ("cavity", fock_cutoff))


def annihilation(n):
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


def build_system_hamiltonian(p1: DqdParams, p2: DqdParams, c: CavityParams, *, check=True) -> Operator:
    if check:
        for k, p in enumerate((p1, p2), 1):
            tol = 1e-9 * max(abs(c.resonator_frequency), 1.0)
            if abs(p.zeeman - c.resonator_frequency) > tol or abs(2 * p.tunnel_coupling - p.zeeman) > tol:
                raise ConfigurationError("resonance constraints B = omega_r = 2 t_c violated", field=f"dqd{k}")
    nf = c.fock_cutoff
    a = annihilation(nf)
    i4, i_f = np.eye(4), np.eye(nf)
    tz = np.kron(SZ, I2)
    h = c.resonator_frequency * _kron(i4, i4, a.conj().T @ a)
    h = h + _kron(build_dqd_hamiltonian(p1).matrix, i4, i_f) + _kron(i4, build_dqd_hamiltonian(p2).matrix, i_f)
    h = h + p1.charge_cavity_coupling * _kron(tz, i4, a + a.conj().T)
    h = h + p2.charge_cavity_coupling * _kron(i4, tz, a + a.conj().T)
    return Operator(system_space(nf), h)


def noise_terms(c: CavityParams) -> list:
    nf = c.fock_cutoff
    i4, i_f = np.eye(4), np.eye(nf)
    sz_s = np.kron(I2, SZ)
    tz = np.kron(SZ, I2)
    terms = []
    g_c = units.dephasing_rate(c.T2_charge)
    g_s = units.dephasing_rate(c.T2_spin)
    if c.cavity_loss > 0:
        terms.append(LindbladTerm(c.cavity_loss * SCALE, _kron(i4, i4, annihilation(nf))))
    if g_c > 0:
        terms.append(LindbladTerm(g_c * SCALE, _kron(tz, i4, i_f)))
        terms.append(LindbladTerm(g_c * SCALE, _kron(i4, tz, i_f)))
    if g_s > 0:
        terms.append(LindbladTerm(g_s * SCALE, _kron(sz_s, i4, i_f)))
        terms.append(LindbladTerm(g_s * SCALE, _kron(i4, sz_s, i_f)))
    return terms


def initial_state(params: OptimizableParameters, nf):
    vac = np.zeros(nf, dtype=complex)
    vac[0] = 1.0
    return _kron(params.psi1, params.psi2, vac)


# ------------------------------------------------------------------ dynamics


def stop_time_grid(t_mean, sigma, n_points=13, width=3.0):
    """Gauss-weighted stopping times over t_mean +- width*sigma, weights summing to 1."""
    if sigma <= 0:
        return np.array([t_mean]), np.ones(1)
    if n_points < 2:
        raise ConfigurationError("need at least two stopping-time points", field="n_stop_points")
    ts = np.linspace(t_mean - width * sigma, t_mean + width * sigma, n_points)
    if ts[0] <= 0:
        raise ConfigurationError("stopping-time window reaches t <= 0", field="stop_jitter_sigma")
    w = np.exp(-0.5 * ((ts - t_mean) / sigma) ** 2)
    return ts, w / w.sum()


def _evolve_system(params, c, times, backend="direct", rtol=1e-9, atol=1e-11):
    """Full-system density matrices at the requested times, shape (T, d, d)."""
    c = cavity_for(params, c)
    h = build_system_hamiltonian(params.dqd(0), params.dqd(1), c).matrix * SCALE
    psi0 = initial_state(params, c.fock_cutoff)
    if c.is_noiseless:
        w, v = np.linalg.eigh(h)
        c0 = v.conj().T @ psi0
        psis = np.einsum("ij,tj->ti", v, np.exp(-1j * np.outer(times, w)) * c0)
        return np.einsum("ti,tj->tij", psis, psis.conj())
    rho0 = np.outer(psi0, psi0.conj())
    return evolve_arrays(rho0, h, noise_terms(c), times, backend, rtol=rtol, atol=atol, hermitian=True)


def accepted_branches(rho, nf):
    """Unnormalized two-spin blocks for the LR and RL charge outcomes, plus vacuum weights."""
    r = rho.reshape(2, 2, 2, 2, nf, 2, 2, 2, 2, nf)
    blocks, vac = {}, {}
    for c1, c2 in ACCEPTED:
        blk = r[c1, :, c2, :, :, c1, :, c2, :, :]
        blocks[(c1, c2)] = np.einsum("abfcdf->abcd", blk).reshape(4, 4)
        vac[(c1, c2)] = float(np.real(np.einsum("abab->", blk[:, :, 0, :, :, 0])))
    return blocks, vac


def charge_probabilities(rho, nf):
    r = rho.reshape(2, 2, 2, 2, nf, 2, 2, 2, 2, nf)
    diag = np.real(np.einsum("abcdeabcde->ac", r))
    return {(i, j): float(diag[i, j]) for i in range(2) for j in range(2)}


_LABEL = {(0, 0): "LL", (0, 1): "LR", (1, 0): "RL", (1, 1): "RR"}


def generate_raw_pair(
    params: OptimizableParameters,
    c: CavityParams,
    stop_jitter_sigma: float = 0.5,
    n_stop_points: int = 13,
    backend: str = "direct",
) -> RawBellResult:
    ts, w = stop_time_grid(params.t_stop, stop_jitter_sigma, n_stop_points)
    rhos = _evolve_system(params, c, ts, backend)
    rho = np.tensordot(w, rhos, axes=1)
    nf = c.fock_cutoff
    blocks, vac = accepted_branches(rho, nf)
    acc = sum(blocks.values())
    p = float(np.real(np.trace(acc)))
    if p <= 1e-14:
        raise NumericalError("odd-parity acceptance probability is zero")
    spin = acc / p
    spin = DensityMatrix(SPIN_PAIR, 0.5 * (spin + spin.conj().T))
    probs = {_LABEL[k]: v for k, v in charge_probabilities(rho, nf).items()}
    return RawBellResult(
        spin_state=spin,
        success_probability=p,
        fidelity=fidelity_to_pure(spin, PSI_MINUS),
        concurrence=concurrence(spin),
        vacuum_probability=sum(vac.values()) / p,
        attempt_time=params.t_stop + 3.0 * max(stop_jitter_sigma, 0.0),
        branch_probabilities=probs,
        provenance={
            "link": "cavity",
            "T2_charge": c.T2_charge, "T2_spin": c.T2_spin, "cavity_loss": c.cavity_loss,
            "fock_cutoff": nf, "t_stop": params.t_stop, "stop_jitter_sigma": stop_jitter_sigma,
            "n_stop_points": len(ts), "backend": backend,
        },
    )


def time_trace(params: OptimizableParameters, c: CavityParams, times, backend="direct"):
    """Odd-parity probability, concurrence and fidelity of the accepted spins over time."""
    times = np.asarray(times, dtype=float)
    rhos = _evolve_system(params, c, times, backend)
    out = {"time": times, "probability": [], "concurrence": [], "fidelity": [], "vacuum": []}
    for rho in rhos:
        blocks, vac = accepted_branches(rho, c.fock_cutoff)
        acc = sum(blocks.values())
        p = float(np.real(np.trace(acc)))
        out["probability"].append(p)
        if p > 1e-12:
            s = 0.5 * (acc + acc.conj().T) / p
            out["concurrence"].append(concurrence(s))
            out["fidelity"].append(fidelity_to_pure(s, PSI_MINUS))
            out["vacuum"].append(sum(vac.values()) / p)
        else:
            out["concurrence"].append(0.0)
            out["fidelity"].append(0.0)
            out["vacuum"].append(0.0)
    return {k: np.asarray(v) for k, v in out.items()}


def concurrence_cost(params: OptimizableParameters, c: CavityParams, weighting="probability") -> float:
    """Negated average concurrence of the accepted charge outcomes at t_stop (no jitter)."""
    rho = _evolve_system(params, c, np.array([params.t_stop]))[0]
    blocks, _ = accepted_branches(rho, c.fock_cutoff)
    ps, cs = [], []
    for blk in blocks.values():
        p = float(np.real(np.trace(blk)))
        ps.append(p)
        cs.append(concurrence(blk / p) if p > 1e-14 else 0.0)
    ps, cs = np.array(ps), np.array(cs)
    if ps.sum() <= 1e-14:
        raise NumericalError("odd-parity acceptance probability is zero")
    if weighting == "probability":
        return -float(ps @ cs / ps.sum())
    if weighting == "uniform":
        return -float(cs.mean())
    raise ConfigurationError(f"unknown weighting {weighting!r}", field="weighting")


# ------------------------------------------------------------------ optimization

_FREQ_SCALE = 100.0


def _pack(p: OptimizableParameters):
    return np.concatenate([
        p.b_x, p.g_c, p.detuning, [p.t_stop],
        p.psi1.real, p.psi1.imag, p.psi2.real, p.psi2.imag,
    ])


def _unpack(x, template: OptimizableParameters):
    return template.replace(
        b_x=tuple(x[0:2]), g_c=tuple(x[2:4]), detuning=tuple(x[4:6]), t_stop=float(x[6]),
        psi1=x[7:11] + 1j * x[11:15], psi2=x[15:19] + 1j * x[19:23],
    )


def _typical(x):
    t = np.ones_like(x)
    t[:6] = _FREQ_SCALE
    return t


@dataclass
class OptimizationReport:
    params: OptimizableParameters
    cost: float
    initial_cost: float
    iterations: int
    converged: bool
    message: str


def optimize_parameters(
    init: OptimizableParameters,
    c: CavityParams,
    *,
    rel_step=1e-4,
    tol=1e-6,
    max_iter=500,
    weighting="probability",
    report=False,
):
    """Quasi-Newton (L-BFGS) ascent of the accepted-outcome concurrence.

    Shared B, omega_r, t_c stay fixed so the resonance constraints hold. The
    gradient is a central difference with step rel_step * max(|x|, typical size).
    Returns the best parameters seen; with ``report=True`` an OptimizationReport.
    """
    init.check_constraints()
    x0 = _pack(init)
    typ = _typical(x0)
    best = {"x": x0.copy(), "f": np.inf}

    def f(x):
        try:
            val = concurrence_cost(_unpack(x, init), c, weighting)
        except ConfigurationError:
            return 1.0  # infeasible (e.g. negative stopping time)
        if val < best["f"]:
            best["f"], best["x"] = val, x.copy()
        return val

    def grad(x):
        g = np.empty_like(x)
        for i in range(x.size):
            h = rel_step * max(abs(x[i]), typ[i])
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            g[i] = (f(xp) - f(xm)) / (2 * h)
        return g

    f0 = f(x0)
    # L-BFGS-B's ftol is a relative reduction test; |cost| <= 1 so it acts as |dcost| < tol
    res = minimize(f, x0, jac=grad, method="L-BFGS-B",
                   options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-9})
    out = _unpack(best["x"], init)
    converged = bool(res.success)
    if not converged:
        warnings.warn(f"cavity parameter optimization stopped: {res.message}", RuntimeWarning, stacklevel=2)
    if report:
        return OptimizationReport(out, float(best["f"]), float(f0), int(res.nit), converged, str(res.message))
    return out


def random_feasible_parameters(rng, template: OptimizableParameters | None = None):
    """Random couplings/gradients/detunings and electron states; shared frequencies kept."""
    template = template or OptimizableParameters()
    def ket():
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        return v / np.linalg.norm(v)
    return template.replace(
        b_x=tuple(rng.uniform(50, 800, 2)), g_c=tuple(rng.uniform(50, 500, 2)),
        detuning=tuple(rng.uniform(-200, 200, 2)), t_stop=float(rng.uniform(8, 25)),
        psi1=ket(), psi2=ket(),
    )


def rescale_parameters(params: OptimizableParameters, lam: float) -> OptimizableParameters:
    """Multiply every frequency by lam and divide the stopping time by lam."""
    if not lam > 0:
        raise ConfigurationError(f"scale factor must be positive, got {lam}", field="lambda")
    return params.replace(
        b_x=tuple(lam * x for x in params.b_x), g_c=tuple(lam * x for x in params.g_c),
        detuning=tuple(lam * x for x in params.detuning), zeeman=lam * params.zeeman,
        omega_r=lam * params.omega_r, t_c=lam * params.t_c, t_stop=params.t_stop / lam,
    )


def cavity_for(params: OptimizableParameters, c: CavityParams) -> CavityParams:
    """Cavity settings with the resonator frequency taken from params."""
    return dataclasses.replace(c, resonator_frequency=params.omega_r)
