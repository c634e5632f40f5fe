"""Lindblad master equation: Liouvillians, propagators and time evolution.

Vectorization is row stacking (``rho.reshape(-1)`` in C order), under which
vec(A rho B) = (A kron B^T) vec(rho).

Three interchangeable backends for ``evolve``:

``direct``       adaptive DOP853 on the d x d matrix (default, cheap for d ~ 100)
``propagator``   dense exp(L dt) from Pade scaling-and-squaring, reused per step
``expm_action``  action of exp(L t) on a vector via scipy's sparse algorithm
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .errors import ConfigurationError, DimensionError, NumericalError, TraceDriftError
from .qmath import DensityMatrix, Operator, _mat

TRACE_ABORT = 1e-6
BACKENDS = ("direct", "propagator", "expm_action")


@dataclass(frozen=True)
class LindbladTerm:
    rate: float
    jump_operator: object  # Operator or array

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate < 0:
            raise ConfigurationError(f"Lindblad rate must be finite and >= 0, got {self.rate}")

    @property
    def matrix(self):
        return _mat(self.jump_operator)


@dataclass(frozen=True)
class SuperOperator:
    dimension: int  # d**2
    matrix: object = field(repr=False)  # dense ndarray or scipy sparse

    def __post_init__(self):
        if self.matrix.shape != (self.dimension, self.dimension):
            raise DimensionError("superoperator matrix does not match its dimension")

    @property
    def system_dim(self):
        return int(round(np.sqrt(self.dimension)))

    def apply(self, rho):
        m = _mat(rho)
        return devectorize(self.matrix @ vectorize(m))

    def dense(self):
        return self.matrix.toarray() if sp.issparse(self.matrix) else np.asarray(self.matrix)

    def __matmul__(self, other: "SuperOperator"):
        return SuperOperator(self.dimension, self.matrix @ other.matrix)


def vectorize(rho):
    return np.ascontiguousarray(_mat(rho)).reshape(-1)


def devectorize(v):
    v = np.asarray(v)
    d = int(round(np.sqrt(v.shape[0])))
    if d * d != v.shape[0]:
        raise DimensionError(f"length {v.shape[0]} is not a square")
    return v.reshape(d, d)


def _terms_matrices(H, terms):
    h = _mat(H)
    d = h.shape[0]
    out = []
    for t in terms:
        a = t.matrix
        if a.shape != (d, d):
            raise DimensionError(f"jump operator {a.shape} does not match H ({d}x{d})")
        out.append((float(t.rate), a))
    return h, out


def build_liouvillian(H, terms: Sequence[LindbladTerm] = (), sparse=False) -> SuperOperator:
    h, tms = _terms_matrices(H, terms)
    d = h.shape[0]
    if sparse:
        eye = sp.identity(d, format="csr", dtype=complex)
        hs = sp.csr_matrix(h)
        L = -1j * (sp.kron(hs, eye) - sp.kron(eye, hs.T))
        for g, a in tms:
            if g == 0:
                continue
            a = sp.csr_matrix(a)
            ada = (a.conj().T @ a).tocsr()
            L = L + g * (sp.kron(a, a.conj()) - 0.5 * sp.kron(ada, eye) - 0.5 * sp.kron(eye, ada.T))
        return SuperOperator(d * d, L.tocsr())
    eye = np.eye(d)
    L = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for g, a in tms:
        if g == 0:
            continue
        ada = a.conj().T @ a
        L += g * (np.kron(a, a.conj()) - 0.5 * np.kron(ada, eye) - 0.5 * np.kron(eye, ada.T))
    return SuperOperator(d * d, L)


def propagate_step(L: SuperOperator, dt: float) -> SuperOperator:
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    p = sla.expm(L.dense() * dt)
    if not np.all(np.isfinite(p)):
        raise NumericalError(f"non-finite entries in exp(L*{dt})")
    return SuperOperator(L.dimension, p)


class _DirectRHS:
    """d rho/dt with diagonal jump operators folded into one elementwise factor."""

    def __init__(self, h, tms, hermitian):
        d = h.shape[0]
        self.d = d
        self.hermitian = hermitian
        diag = np.zeros((d, d), dtype=complex)
        k = -1j * sp.csr_matrix(h)
        self.jumps = []
        for g, a in tms:
            if g == 0:
                continue
            if np.count_nonzero(a - np.diag(np.diag(a))) == 0:
                av = np.diag(a)
                n2 = np.abs(av) ** 2
                diag += g * (np.outer(av, av.conj()) - 0.5 * n2[:, None] - 0.5 * n2[None, :])
            else:
                asp = sp.csr_matrix(a)
                k = k - 0.5 * g * (asp.conj().T @ asp)
                self.jumps.append((g, asp))
        self.k = sp.csr_matrix(k)
        self.kdag = sp.csr_matrix(self.k.conj().T)
        self.diag = diag if np.any(diag) else None

    def __call__(self, t, y):
        r = y.reshape(self.d, self.d)
        kr = self.k @ r
        if self.hermitian:
            out = kr + kr.conj().T
        else:
            out = kr + r @ self.kdag
        for g, a in self.jumps:
            ar = a @ r
            out += g * (a @ ar.conj().T) if self.hermitian else g * (ar @ a.conj().T)
        if self.diag is not None:
            out += self.diag * r
        return out.reshape(-1)


def _check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float).reshape(-1)
    if t.size == 0:
        raise ConfigurationError("empty time grid")
    if t[0] < 0 or np.any(np.diff(t) < 0):
        raise ConfigurationError("time grid must start at >= 0 and be non-decreasing")
    return t


def _check_trace(states, t, tr0):
    for k, m in enumerate(states):
        drift = abs(np.trace(m) - tr0)
        if not np.isfinite(drift):
            raise NumericalError(f"non-finite state at t={t[k]:g}")
        if drift > TRACE_ABORT:
            raise TraceDriftError(float(drift), float(t[k]), k)


def evolve_arrays(
    rho0,
    H,
    terms: Sequence[LindbladTerm] = (),
    t_grid=(0.0,),
    backend="direct",
    *,
    rtol=1e-9,
    atol=1e-11,
    dt=None,
    hermitian=None,
    max_propagator_bytes=2 ** 30,
    check_trace=True,
):
    """Like ``evolve`` but takes and returns bare arrays, shape (len(t_grid), d, d).

    ``hermitian`` (default: detected from rho0) lets the direct backend halve its
    work; pass False to push non-Hermitian operators through the same dynamics.
    """
    r0 = np.array(_mat(rho0), dtype=complex)
    h, tms = _terms_matrices(H, terms)
    d = h.shape[0]
    if r0.shape != (d, d):
        raise DimensionError(f"state is {r0.shape}, Hamiltonian is {d}x{d}")
    t = _check_grid(t_grid)
    if hermitian is None:
        hermitian = bool(np.allclose(r0, r0.conj().T, atol=1e-12))
    tr0 = np.trace(r0)

    if backend == "direct":
        rhs = _DirectRHS(h, tms, hermitian)
        out = np.empty((t.size, d, d), dtype=complex)
        mask = t > 0
        out[~mask] = r0
        if mask.any():
            sol = solve_ivp(rhs, (0.0, t[-1]), r0.reshape(-1), method="DOP853",
                            t_eval=t[mask], rtol=rtol, atol=atol)
            if sol.status < 0:
                raise NumericalError(f"integrator failed: {sol.message}")
            out[mask] = sol.y.T.reshape(-1, d, d)
    elif backend == "propagator":
        need = 16 * d ** 4
        if need > max_propagator_bytes:
            raise ConfigurationError(
                f"dense propagator for d={d} needs {need / 2**30:.1f} GiB "
                f"(limit {max_propagator_bytes / 2**30:.1f} GiB); use 'direct' or 'expm_action'",
                field="backend")
        L = build_liouvillian(h, [LindbladTerm(g, a) for g, a in tms])
        step = float(dt) if dt else max(t[-1], 1e-300) / 600
        P = propagate_step(L, step).matrix
        cache = {}
        v = r0.reshape(-1)
        now = 0.0
        out = np.empty((t.size, d, d), dtype=complex)
        for k, tk in enumerate(t):
            n_full = int(np.floor((tk - now) / step + 1e-9))
            for _ in range(n_full):
                v = P @ v
            now += n_full * step
            rem = tk - now
            if rem > 1e-12 * max(1.0, tk):
                key = round(rem, 12)
                if key not in cache:
                    cache[key] = propagate_step(L, rem).matrix
                v = cache[key] @ v
                now = tk
            out[k] = v.reshape(d, d)
    elif backend == "expm_action":
        L = build_liouvillian(h, [LindbladTerm(g, a) for g, a in tms], sparse=True).matrix
        v = r0.reshape(-1)
        now = 0.0
        out = np.empty((t.size, d, d), dtype=complex)
        for k, tk in enumerate(t):
            if tk > now:
                # always start at 0: scipy's interval form misbehaves for start != 0
                v = expm_multiply(L * (tk - now), v)
                now = tk
            out[k] = v.reshape(d, d)
    else:
        raise ConfigurationError(f"unknown backend {backend!r}; choose from {BACKENDS}", field="backend")

    if check_trace:
        _check_trace(out, t, tr0)
    return out


def evolve(rho0, H, terms: Sequence[LindbladTerm] = (), t_grid=(0.0,), backend="direct", **kw):
    """Trajectory of density matrices at the grid times, starting from rho0 at t=0."""
    space = rho0.space if isinstance(rho0, Operator) else (H.space if isinstance(H, Operator) else None)
    arrs = evolve_arrays(rho0, H, terms, t_grid, backend, **kw)
    res = []
    for m in arrs:
        m = 0.5 * (m + m.conj().T)
        res.append(DensityMatrix(space, m / np.trace(m).real) if space is not None
                   else DensityMatrix.from_matrix(m / np.trace(m).real))
    return res


def unitary_propagator(H, t):
    """exp(-i H t) through the eigendecomposition of a Hermitian H."""
    w, v = np.linalg.eigh(_mat(H))
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def piecewise_constant_propagator(h_of_t, t0, t1, n_steps):
    """Time-ordered product of exp(-i H(t_mid) dt) over n_steps equal slices."""
    dt = (t1 - t0) / n_steps
    u = None
    for k in range(n_steps):
        step = unitary_propagator(h_of_t(t0 + (k + 0.5) * dt), dt)
        u = step if u is None else step @ u
    return u
