"""States, operators and entanglement measures over labelled tensor spaces."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError, InvalidStateError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
PSD_TOL = 1e-9
NORM_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HilbertSpace:
    factors: tuple  # ((label, dim), ...)

    def __post_init__(self):
        facs = tuple((str(lab), int(d)) for lab, d in self.factors)
        if not facs:
            raise DimensionError("a Hilbert space needs at least one factor")
        labels = [lab for lab, _ in facs]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"duplicate factor labels {labels}")
        if any(d < 1 for _, d in facs):
            raise DimensionError("factor dimensions must be positive")
        object.__setattr__(self, "factors", facs)

    @classmethod
    def of(cls, *pairs):
        return cls(tuple(pairs))

    @classmethod
    def qubits(cls, *labels):
        return cls(tuple((lab, 2) for lab in labels))

    @property
    def labels(self):
        return tuple(lab for lab, _ in self.factors)

    @property
    def dims(self):
        return tuple(d for _, d in self.factors)

    @property
    def dim(self):
        return int(np.prod(self.dims))

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigurationError(f"unknown factor label {label!r}; have {self.labels}") from None

    def concat(self, other: "HilbertSpace") -> "HilbertSpace":
        """Concatenate factor lists, suffixing clashing labels with '#k'."""
        seen = set(self.labels)
        out = list(self.factors)
        for lab, d in other.factors:
            new, k = lab, 1
            while new in seen:
                new = f"{lab}#{k}"
                k += 1
            seen.add(new)
            out.append((new, d))
        return HilbertSpace(tuple(out))

    def subspace(self, labels):
        return HilbertSpace(tuple(f for f in self.factors if f[0] in set(labels)))


def _default_space(dim):
    if dim & (dim - 1) == 0 and dim > 1:
        n = dim.bit_length() - 1
        return HilbertSpace.qubits(*[f"q{i}" for i in range(n)])
    return HilbertSpace.of(("sys", dim))


@dataclass(frozen=True)
class Operator:
    space: HilbertSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator matrix must be square, got {m.shape}")
        if m.shape[0] != self.space.dim:
            raise DimensionError(f"matrix is {m.shape[0]}-dim, space is {self.space.dim}-dim")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, m, space=None):
        m = np.asarray(m)
        return cls(space or _default_space(m.shape[0]), m)

    @property
    def dim(self):
        return self.space.dim

    def dag(self):
        return Operator(self.space, self.matrix.conj().T)

    def __matmul__(self, other):
        if isinstance(other, Ket):
            return Ket(other.space, self.matrix @ other.amplitudes, normalize=True)
        return Operator(self.space, self.matrix @ _mat(other))

    def __add__(self, other):
        return Operator(self.space, self.matrix + _mat(other))

    def __sub__(self, other):
        return Operator(self.space, self.matrix - _mat(other))

    def __mul__(self, c):
        return Operator(self.space, self.matrix * c)

    __rmul__ = __mul__

    def is_hermitian(self, tol=HERMITIAN_TOL):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) <= tol


def _mat(x):
    return x.matrix if isinstance(x, Operator) else np.asarray(x)


class DensityMatrix(Operator):
    """Operator that passed the Hermitian / unit-trace / PSD checks."""

    def __post_init__(self):
        super().__post_init__()
        m = self.matrix
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"not Hermitian (max |rho - rho^dag| = {herm:.2e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace is {tr!r}")
        low = float(np.linalg.eigvalsh(m).min())
        if low < -PSD_TOL:
            raise InvalidStateError(f"negative eigenvalue {low:.3e}")

    @classmethod
    def from_matrix(cls, m, space=None, *, symmetrize=False):
        m = np.asarray(m, dtype=complex)
        if symmetrize:
            m = 0.5 * (m + m.conj().T)
        return cls(space or _default_space(m.shape[0]), m)

    @classmethod
    def pure(cls, ket: "Ket"):
        a = ket.amplitudes
        return cls(ket.space, np.outer(a, a.conj()))

    @classmethod
    def maximally_mixed(cls, space):
        return cls(space, np.eye(space.dim) / space.dim)

    def purity(self):
        return float(np.real(np.vdot(self.matrix, self.matrix)))


@dataclass(frozen=True, init=False)
class Ket:
    space: HilbertSpace
    amplitudes: np.ndarray = field(repr=False)

    def __init__(self, space, amplitudes, normalize=False):
        a = np.array(amplitudes, dtype=complex).reshape(-1)
        if a.shape[0] != space.dim:
            raise DimensionError(f"{a.shape[0]} amplitudes for a {space.dim}-dim space")
        nrm = np.linalg.norm(a)
        if normalize:
            if nrm == 0:
                raise InvalidStateError("cannot normalize the zero vector")
            a = a / nrm
        elif abs(nrm ** 2 - 1.0) > NORM_TOL:
            raise InvalidStateError(f"squared norm {nrm ** 2!r} != 1")
        a.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_vector(cls, v, space=None, normalize=False):
        v = np.asarray(v)
        return cls(space or _default_space(v.shape[0]), v, normalize=normalize)

    @classmethod
    def basis(cls, space, index):
        if isinstance(index, str):
            index = int(index, 2)
        v = np.zeros(space.dim, dtype=complex)
        v[index] = 1.0
        return cls(space, v)

    def dm(self) -> DensityMatrix:
        return DensityMatrix.pure(self)


@dataclass(frozen=True)
class PauliTransferMatrix:
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.shape != (4, 4):
            raise DimensionError("a single-qubit PTM is 4x4")
        if np.max(np.abs(e)) > 1 + 1e-9:
            raise InvalidStateError("PTM entries must lie in [-1, 1]")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def is_trace_preserving(self, tol=1e-9):
        return bool(np.allclose(self.entries[0], [1, 0, 0, 0], atol=tol))


class Outcome(NamedTuple):
    probability: float
    state: DensityMatrix | None  # None when the branch has (numerically) zero weight


# ---------------------------------------------------------------- constructors


def pauli(name, label="q"):
    idx = {"i": 0, "x": 1, "y": 2, "z": 3}[name.lower()]
    return Operator(HilbertSpace.of((label, 2)), PAULIS[idx])


def identity(space_or_dim):
    if isinstance(space_or_dim, HilbertSpace):
        return Operator(space_or_dim, np.eye(space_or_dim.dim))
    return Operator.from_matrix(np.eye(space_or_dim))


def tensor(ops: Sequence[Operator]) -> Operator:
    if not ops:
        raise ConfigurationError("tensor() needs at least one operator")
    ops = [o if isinstance(o, Operator) else Operator.from_matrix(o) for o in ops]
    space = reduce(lambda s, o: s.concat(o.space), ops[1:], ops[0].space)
    return Operator(space, reduce(np.kron, [o.matrix for o in ops]))


def tensor_kets(kets: Sequence[Ket]) -> Ket:
    space = reduce(lambda s, k: s.concat(k.space), kets[1:], kets[0].space)
    return Ket(space, reduce(np.kron, [k.amplitudes for k in kets]), normalize=True)


def tensor_states(states: Sequence[DensityMatrix]) -> DensityMatrix:
    op = tensor(states)
    return DensityMatrix(op.space, op.matrix)


def embed(op, label, space: HilbertSpace) -> Operator:
    """Lift a single-factor operator onto ``space`` at factor ``label``."""
    m = _mat(op)
    k = space.index(label)
    mats = [np.eye(d) for d in space.dims]
    if m.shape[0] != space.dims[k]:
        raise DimensionError(f"operator dim {m.shape[0]} != factor {label!r} dim {space.dims[k]}")
    mats[k] = m
    return Operator(space, reduce(np.kron, mats))


# ---------------------------------------------------------------- reductions


def partial_trace_array(m, dims, keep_idx):
    """Reduced matrix over the factor indices in ``keep_idx`` (sorted order kept)."""
    n = len(dims)
    t = np.asarray(m).reshape(tuple(dims) * 2)
    letters = list(range(2 * n))
    for k in range(n):
        if k not in keep_idx:
            letters[n + k] = letters[k]
    keep_idx = sorted(keep_idx)
    out = keep_idx + [n + k for k in keep_idx]
    r = np.einsum(t, letters, out)
    d = int(np.prod([dims[k] for k in keep_idx])) if keep_idx else 1
    return r.reshape(d, d)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    if isinstance(keep, str):
        keep = {keep}
    keep = set(keep)
    unknown = keep - set(rho.space.labels)
    if unknown:
        raise ConfigurationError(f"unknown labels {sorted(unknown)}; have {rho.space.labels}")
    idx = [rho.space.index(lab) for lab in rho.space.labels if lab in keep]
    red = partial_trace_array(rho.matrix, rho.space.dims, idx)
    return DensityMatrix(rho.space.subspace(keep), 0.5 * (red + red.conj().T))


# ---------------------------------------------------------------- measures


_YY = np.kron(SY, SY)


def concurrence(rho) -> float:
    """Wootters concurrence from the singular values of A^T (Y (x) Y) A, rho = A A^dag.

    Eigenvalues of rho below 1e-13 of the largest are treated as zero; they are
    numerical noise for every state this package produces, and their square
    roots would otherwise leak ~1e-8 errors into the result.
    """
    m = _mat(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"concurrence needs a two-qubit state, got {m.shape}")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.where(w > 1e-13 * max(w.max(), 0.0), w, 0.0)
    a = v * np.sqrt(w)
    lam = np.linalg.svd(a.T @ _YY @ a, compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def fidelity_to_pure(rho, psi) -> float:
    m = _mat(rho)
    a = psi.amplitudes if isinstance(psi, Ket) else np.asarray(psi)
    if a.shape[0] != m.shape[0]:
        raise DimensionError(f"state is {m.shape[0]}-dim, ket is {a.shape[0]}-dim")
    return float(np.real(a.conj() @ m @ a))


def bell_state(alpha: int) -> Ket:
    """(sigma_alpha (x) I)|Phi+>, alpha in 0..3 for I, X, Y, Z."""
    if alpha not in (0, 1, 2, 3):
        raise ConfigurationError(f"Bell index must be 0..3, got {alpha!r}")
    phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    return Ket(HilbertSpace.qubits("a", "b"), np.kron(PAULIS[alpha], I2) @ phi)


PSI_MINUS = Ket(HilbertSpace.qubits("a", "b"), np.array([0, 1, -1, 0]) / np.sqrt(2))


def bell_diagonal(rho) -> np.ndarray:
    """Weights <Phi_alpha|rho|Phi_alpha> for alpha = 0..3."""
    m = _mat(rho)
    return np.array([fidelity_to_pure(m, bell_state(a)) for a in range(4)])


def bell_basis_matrix(rho) -> np.ndarray:
    """rho in the ordered basis (Phi+, Psi+, Psi-, Phi-)."""
    b = np.column_stack([bell_state(a).amplitudes for a in range(4)])
    b[:, 2] *= 1j  # (Y (x) I)|Phi+> = -i|Psi->; fix the phase so the column is Psi-
    return b.conj().T @ _mat(rho) @ b


def pauli_transfer_matrix(channel) -> PauliTransferMatrix:
    """R_ij = 1/2 Tr[sigma_i L(sigma_j)] in the order (I, X, Y, Z).

    ``channel`` is a 4x4 superoperator in row-stacked form (anything with a
    ``.matrix`` attribute, or a bare array) or a callable acting on 2x2 arrays.
    """
    if callable(channel) and not hasattr(channel, "matrix"):
        apply = channel
    else:
        s = np.asarray(getattr(channel, "matrix", channel))
        if hasattr(s, "toarray"):
            s = s.toarray()
        if s.shape != (4, 4):
            raise DimensionError(f"PTM needs a single-qubit channel, got superoperator {s.shape}")

        def apply(x):
            return (s @ x.reshape(-1)).reshape(2, 2)

    r = np.empty((4, 4))
    for j, pj in enumerate(PAULIS):
        out = np.asarray(apply(pj))
        if out.shape != (2, 2):
            raise DimensionError("channel output is not a qubit operator")
        for i, pi in enumerate(PAULIS):
            r[i, j] = 0.5 * np.real(np.trace(pi @ out))
    return PauliTransferMatrix(r)


def measure_projective(rho, projectors, tol=1e-9, zero_tol=1e-14) -> list:
    m = _mat(rho)
    space = rho.space if isinstance(rho, Operator) else _default_space(m.shape[0])
    ps = [_mat(p) for p in projectors]
    total = np.zeros_like(m)
    for p in ps:
        if p.shape != m.shape:
            raise DimensionError("projector dimension mismatch")
        if np.max(np.abs(p - p.conj().T)) > tol or np.max(np.abs(p @ p - p)) > tol:
            raise ConfigurationError("projectors must be Hermitian and idempotent")
        total = total + p
    if np.max(np.abs(total - np.eye(m.shape[0]))) > tol:
        raise ConfigurationError("projectors do not sum to the identity")
    out = []
    for p in ps:
        post = p @ m @ p
        prob = float(np.real(np.trace(post)))
        if prob <= zero_tol:
            out.append(Outcome(max(prob, 0.0), None))
        else:
            post = post / prob
            out.append(Outcome(prob, DensityMatrix(space, 0.5 * (post + post.conj().T))))
    return out


def random_density_matrix(dim, rng, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_unitary(dim, rng):
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
