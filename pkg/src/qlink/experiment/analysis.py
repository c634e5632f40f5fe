"""Bell-basis comparison of link outputs, with a local-unitary fidelity search."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..qmath import _mat

_S2 = 1 / np.sqrt(2)
# columns: Phi+, Phi-, Psi+, Psi-
BELL_BASIS = np.array([[_S2, _S2, 0, 0],
                       [0, 0, _S2, _S2],
                       [0, 0, _S2, -_S2],
                       [_S2, -_S2, 0, 0]], dtype=complex)
BELL_LABELS = ("Phi+", "Phi-", "Psi+", "Psi-")
_PHI_PLUS = BELL_BASIS[:, 0]


def in_bell_basis(rho):
    return BELL_BASIS.conj().T @ _mat(rho) @ BELL_BASIS


def _qubit_unitary(a, b, c):
    rz = lambda t: np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])  # noqa: E731
    ry = np.array([[np.cos(b / 2), -np.sin(b / 2)], [np.sin(b / 2), np.cos(b / 2)]])
    return rz(a) @ ry @ rz(c)


def local_unitary(x):
    return np.kron(_qubit_unitary(*x[:3]), _qubit_unitary(*x[3:]))


def best_bell_fidelity_lu(rho, n_starts=8, seed=0):
    """max over U_A (x) U_B of <Phi+|U rho U^dag|Phi+> (BFGS over six Euler angles).

    Every Bell state is locally equivalent to Phi+, so one target suffices.
    The starts include the four Pauli frames, so the result is never below the
    largest Bell-diagonal weight.
    """
    m = _mat(rho)

    def neg(x):
        v = local_unitary(x).conj().T @ _PHI_PLUS
        return -float(np.real(v.conj() @ m @ v))

    rng = np.random.default_rng(seed)
    # U^dag Phi+ equals each Bell state (up to phase) for these frames on qubit A
    starts = [np.zeros(6), np.array([0, np.pi, 0, 0, 0, 0.0]), np.array([np.pi, 0, 0, 0, 0, 0.0]),
              np.array([np.pi, np.pi, 0, 0, 0, 0.0])]
    starts += [rng.uniform(-np.pi, np.pi, 6) for _ in range(max(0, n_starts - len(starts)))]
    best = max(-neg(x) for x in starts)
    best_x = None
    for x0 in starts:
        res = minimize(neg, x0, method="BFGS", options={"gtol": 1e-10})
        if -res.fun > best:
            best, best_x = -res.fun, res.x
    return float(best), best_x


@dataclass
class BellComparison:
    labels: tuple
    magnitudes: dict  # name -> 4x4 |rho| in the Bell basis
    bell_weights: dict  # name -> diagonal in the Bell basis
    best_bell: dict  # name -> largest diagonal weight (no rotation)
    best_bell_lu: dict  # name -> fidelity maximized over local unitaries


def compare_bell_basis(cavity_raw, cavity_purified, shuttle_raw, shuttle_purified) -> BellComparison:
    states = {"cavity_raw": cavity_raw, "cavity_purified": cavity_purified,
              "shuttle_raw": shuttle_raw, "shuttle_purified": shuttle_purified}
    mags, diag, best, lu = {}, {}, {}, {}
    for name, rho in states.items():
        b = in_bell_basis(rho)
        mags[name] = np.abs(b)
        diag[name] = np.real(np.diag(b))
        best[name] = float(diag[name].max())
        lu[name] = max(best[name], best_bell_fidelity_lu(rho)[0])
    return BellComparison(BELL_LABELS, mags, diag, best, lu)
