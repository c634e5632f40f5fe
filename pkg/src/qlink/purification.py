"""Recurrence entanglement purification with noisy local operations.

Register order inside a round is A1 B1 A2 B2: Alice holds A1, A2, Bob holds
B1, B2, the first pair (A1, B1) survives and the second is measured.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError, NotPurifiableError, NumericalError
from .qmath import (
    SX, SY, SZ, DensityMatrix, HilbertSpace, _mat, bell_state, concurrence, fidelity_to_pure,
)

PAIR = HilbertSpace.qubits("alice", "bob")
PHI_PLUS = bell_state(0)

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])
GATES = {
    "I": np.eye(2, dtype=complex), "X": SX, "Y": SY, "Z": SZ, "H": _H,
    "S": _S, "Sdg": _S.conj().T,
    "SX": np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]) / 2,
}
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


@dataclass(frozen=True)
class NoiseModel:
    depol_1q: float = 0.0002
    depol_2q: float = 0.001
    meas_error: float = 0.001

    def __post_init__(self):
        for name in ("depol_1q", "depol_2q", "meas_error"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name}={v} is not a probability", field=f"noise.{name}")

    @classmethod
    def from_2q(cls, p2, meas_error=0.001):
        """Single-qubit gates five times cleaner than two-qubit gates."""
        return cls(p2 / 5.0, p2, meas_error)

    @classmethod
    def ideal(cls):
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RoundSpec:
    target: str = "bit"  # "bit" or "phase"
    pre_rotations: tuple = ((), ())  # (gates on Alice's qubits, gates on Bob's qubits)
    accept_rule: str = "equal"

    def __post_init__(self):
        if self.target not in ("bit", "phase"):
            raise ConfigurationError(f"round target must be 'bit' or 'phase', got {self.target!r}")
        if self.accept_rule != "equal":
            raise ConfigurationError("only the equal-outcomes acceptance rule is supported")
        pre = tuple(tuple(side) for side in self.pre_rotations)
        if len(pre) != 2:
            raise ConfigurationError("pre_rotations needs one gate list per side")
        for g in pre[0] + pre[1]:
            if g not in GATES:
                raise ConfigurationError(f"unknown gate {g!r}; known: {sorted(GATES)}")
        object.__setattr__(self, "pre_rotations", pre)


@dataclass(frozen=True)
class PurificationProtocol:
    rounds: tuple

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        if not self.rounds:
            raise ConfigurationError("a protocol needs at least one round", field="purification.rounds")

    @classmethod
    def canonical(cls, n_rounds=2):
        """Alternating bit/phase rounds; bit rounds open with H on both sides."""
        rounds = []
        for k in range(n_rounds):
            if k % 2 == 0:
                rounds.append(RoundSpec("bit", (("H",), ("H",))))
            else:
                rounds.append(RoundSpec("phase"))
        return cls(tuple(rounds))

    def with_extra_gate(self, gate="S", from_round=1):
        """Append ``gate`` on both sides to every round from index ``from_round`` on."""
        rounds = list(self.rounds)
        for k in range(from_round, len(rounds)):
            a, b = rounds[k].pre_rotations
            rounds[k] = replace(rounds[k], pre_rotations=(a + (gate,), b + (gate,)))
        return PurificationProtocol(tuple(rounds))


@dataclass
class PurificationStats:
    final_state: DensityMatrix
    fidelity: float
    per_round_failure: list
    expected_raw_pairs: float  # raw generation attempts, failures included
    generation_rate: float  # MHz when attempt_time is in ns
    raw_failure: float = 0.0
    expected_successful_raw_pairs: float = 0.0
    attempt_time: float = 0.0
    concurrence: float = 0.0
    level_states: list = field(default_factory=list, repr=False)
    level_fidelities: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.per_round_failure)
        if self.expected_raw_pairs < 2 ** n - 1e-9:
            raise NumericalError("expected raw pairs below 2^rounds")


# ------------------------------------------------------------------ one round


def _gate(rho, name, q, p1):
    rho = kernels.apply_unitary(rho, GATES[name], [q], 4)
    return kernels.depolarize(rho, p1, [q], 4)


def round_branches(pair_a, pair_b, spec: RoundSpec, noise: NoiseModel):
    """Unnormalized kept-pair state on acceptance, and the acceptance probability."""
    a, b = _mat(pair_a), _mat(pair_b)
    if a.shape != (4, 4) or b.shape != (4, 4):
        raise ConfigurationError("purification inputs must be two-qubit states")
    rho = np.ascontiguousarray(np.kron(a, b), dtype=complex)
    p1, p2, pm = noise.depol_1q, noise.depol_2q, noise.meas_error
    alice, bob = spec.pre_rotations
    for g in alice:
        for q in (0, 2):
            rho = _gate(rho, g, q, p1)
    for g in bob:
        for q in (1, 3):
            rho = _gate(rho, g, q, p1)
    if spec.target == "phase":
        for q in range(4):
            rho = _gate(rho, "H", q, p1)
    for c, t in ((0, 2), (1, 3)):
        rho = kernels.apply_unitary(rho, CNOT, [c, t], 4)
        rho = kernels.depolarize(rho, p2, [c, t], 4)
    r = rho.reshape(4, 2, 2, 4, 2, 2)
    kept = np.zeros((4, 4), dtype=complex)
    for ma in range(2):
        for mb in range(2):
            # chance that the two reported bits agree given true outcomes (ma, mb)
            w = sum(((1 - pm) if r_ == ma else pm) * ((1 - pm) if r_ == mb else pm) for r_ in range(2))
            kept += w * r[:, ma, mb, :, ma, mb]
    p_acc = float(np.real(np.trace(kept)))
    if spec.target == "phase" and p_acc > 0:
        for q in range(2):
            kept = kernels.apply_unitary(kept.copy(), _H, [q], 2)
            kept = kernels.depolarize(kept, p1, [q], 2)
    return kept, p_acc


def round_outcomes(pair_a, pair_b, spec: RoundSpec = RoundSpec(), noise: NoiseModel = NoiseModel.ideal()):
    """Unnormalized kept-pair state for every reported outcome pair (ra, rb).

    The trace of each block is the probability of that report. Useful when a
    protocol post-selects on one particular agreeing outcome rather than any.
    """
    a, b = _mat(pair_a), _mat(pair_b)
    if a.shape != (4, 4) or b.shape != (4, 4):
        raise ConfigurationError("purification inputs must be two-qubit states")
    rho = np.ascontiguousarray(np.kron(a, b), dtype=complex)
    p1, p2, pm = noise.depol_1q, noise.depol_2q, noise.meas_error
    alice, bob = spec.pre_rotations
    for g in alice:
        for q in (0, 2):
            rho = _gate(rho, g, q, p1)
    for g in bob:
        for q in (1, 3):
            rho = _gate(rho, g, q, p1)
    if spec.target == "phase":
        for q in range(4):
            rho = _gate(rho, "H", q, p1)
    for c, t in ((0, 2), (1, 3)):
        rho = kernels.apply_unitary(rho, CNOT, [c, t], 4)
        rho = kernels.depolarize(rho, p2, [c, t], 4)
    r = rho.reshape(4, 2, 2, 4, 2, 2)
    flip = np.array([[1 - pm, pm], [pm, 1 - pm]])  # flip[true, reported]
    out = {}
    for ra in range(2):
        for rb in range(2):
            kept = sum(flip[ma, ra] * flip[mb, rb] * r[:, ma, mb, :, ma, mb]
                       for ma in range(2) for mb in range(2))
            if spec.target == "phase":
                for q in range(2):
                    kept = kernels.apply_unitary(np.ascontiguousarray(kept), _H, [q], 2)
                    kept = kernels.depolarize(kept, p1, [q], 2)
            out[(ra, rb)] = kept
    return out


def purify_round(pair_a, pair_b, spec: RoundSpec, noise: NoiseModel):
    kept, p = round_branches(pair_a, pair_b, spec, noise)
    if p <= 1e-15:
        raise NumericalError("purification round has zero acceptance probability")
    out = kept / p
    return DensityMatrix(PAIR, 0.5 * (out + out.conj().T)), p


# ------------------------------------------------------------------ protocol


def _raw_item(raw_source):
    if hasattr(raw_source, "spin_state"):
        return raw_source.spin_state, raw_source.success_probability, raw_source.attempt_time
    if isinstance(raw_source, tuple) and len(raw_source) == 3:
        return raw_source
    it = iter(raw_source)
    return _raw_item(next(it))


def run_protocol(raw_source, protocol: PurificationProtocol, noise: NoiseModel) -> PurificationStats:
    """Deterministic bookkeeping of the recursive protocol.

    Every level is built from two copies of the level below. With raw success
    p_raw and round acceptances p_i, the expected number of raw generation
    attempts is E_0 = 1/p_raw and E_i = 2 E_{i-1} / p_i; the rate is
    1 / (E_n * attempt_time).
    """
    state, p_raw, t_attempt = _raw_item(raw_source)
    if not 0 < p_raw <= 1:
        raise ConfigurationError(f"raw success probability {p_raw} outside (0, 1]")
    rho = _mat(state)
    levels = [DensityMatrix(PAIR, rho)]
    fids = [fidelity_to_pure(rho, PHI_PLUS)]
    e_att = 1.0 / p_raw
    e_succ = 1.0
    failures = []
    for spec in protocol.rounds:
        out, p = purify_round(levels[-1], levels[-1], spec, noise)
        if p <= 0:
            raise NumericalError("a round never succeeds")
        failures.append(1.0 - p)
        e_att = 2.0 * e_att / p
        e_succ = 2.0 * e_succ / p
        levels.append(out)
        fids.append(fidelity_to_pure(out, PHI_PLUS))
    final = levels[-1]
    return PurificationStats(
        final_state=final,
        fidelity=fids[-1],
        per_round_failure=failures,
        expected_raw_pairs=e_att,
        generation_rate=1e3 / (e_att * t_attempt) if t_attempt > 0 else float("inf"),
        raw_failure=1.0 - p_raw,
        expected_successful_raw_pairs=e_succ,
        attempt_time=t_attempt,
        concurrence=concurrence(final),
        level_states=levels,
        level_fidelities=fids,
    )


def alt_protocol_s_gates(raw_source, protocol: PurificationProtocol, noise: NoiseModel, gate="S"):
    """Same as run_protocol with an extra gate on both sides in every round after the first."""
    return run_protocol(raw_source, protocol.with_extra_gate(gate, from_round=1), noise)


def check_purifiable(rho, threshold=0.5):
    """Raise when the best Bell-diagonal weight is at or below ``threshold``."""
    w = np.array([fidelity_to_pure(rho, bell_state(a)) for a in range(4)])
    if w.max() <= threshold:
        raise NotPurifiableError(f"largest Bell weight {w.max():.3f} <= {threshold}")
    return w


# ------------------------------------------------------------------ Monte Carlo


def sample_raw_attempts(p_raw, round_success: Sequence[float], rng, n_samples=10_000):
    """Raw generation attempts needed for one top-level pair, sampled n_samples times."""
    round_success = list(round_success)

    def attempts(level):
        if level == 0:
            return int(rng.geometric(p_raw))
        total = 0
        while True:
            total += attempts(level - 1) + attempts(level - 1)
            if rng.random() < round_success[level - 1]:
                return total

    return np.array([attempts(len(round_success)) for _ in range(n_samples)], dtype=float)


# ------------------------------------------------------------------ twirling

_PAULI_PAIRS = [np.kron(p, p.conj()) for p in (np.eye(2), SX, SY, SZ)]
# rotation by 2pi/3 about (1,1,1): cycles X -> Y -> Z
_CYCLE = (np.eye(2) - 1j * (SX + SY + SZ)) / 2
_CYCLES = [np.eye(4), np.kron(_CYCLE, _CYCLE.conj()), np.kron(_CYCLE @ _CYCLE, (_CYCLE @ _CYCLE).conj())]


def twirl(rho, rng=None, n_samples=256, isotropic=False):
    """Bell-diagonalize by averaging sigma_k (x) sigma_k^* conjugations.

    Exact group average when ``rng`` is None, otherwise the mean of
    ``n_samples`` random draws. ``isotropic`` additionally spreads the error
    weight evenly over the three non-target Bell states (Werner form).
    """
    m = _mat(rho)
    group = _PAULI_PAIRS
    if isotropic:
        group = [c @ p for c in _CYCLES for p in _PAULI_PAIRS]
    if rng is None:
        out = sum(u @ m @ u.conj().T for u in group) / len(group)
    else:
        idx = rng.integers(0, len(group), size=n_samples)
        out = sum(group[i] @ m @ group[i].conj().T for i in idx) / n_samples
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(PAIR, out) if np.isclose(np.trace(out).real, 1.0, atol=1e-9) else out


def werner_state(f):
    """F |Phi+><Phi+| + (1-F)/3 (rest of the Bell basis)."""
    phi = np.outer(PHI_PLUS.amplitudes, PHI_PLUS.amplitudes.conj())
    return DensityMatrix(PAIR, f * phi + (1 - f) / 3 * (np.eye(4) - phi))


def bell_mixture(weights: Iterable[float]):
    """sum_a w_a |Phi_a><Phi_a| with the Pauli-indexed Bell states."""
    m = np.zeros((4, 4), dtype=complex)
    for a, w in enumerate(weights):
        v = bell_state(a).amplitudes
        m += w * np.outer(v, v.conj())
    return DensityMatrix(PAIR, m)
