"""Two-electron double-dot spectrum for valley-to-charge conversion.

Eight fermionic modes (dot, valley, spin) are built by a Jordan-Wigner map;
the two-electron states with the left dot at most singly occupied span the
(1,1) and (0,2) charge configurations. Tunnelling conserves spin and valley,
so the number of up spins and of excited-valley electrons label independent
blocks. Inside a block, eigenvalues sorted by energy are followed across the
detuning grid, which is the adiabatic connection when levels do not cross.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from ..errors import ConfigurationError

DOTS = ("L", "R")
VALLEYS = ("-", "+")
SPINS = ("u", "d")
MODES = tuple(product(DOTS, VALLEYS, SPINS))  # index = position in this tuple


@dataclass(frozen=True)
class ReadoutParams:
    U: float = 1000.0
    t: float = 5.0
    zeeman_l: float = 51.0
    zeeman_r: float = 49.0
    valley_l: float = 90.0  # splittings E_V
    valley_r: float = 110.0

    def __post_init__(self):
        if self.U <= 0:
            raise ConfigurationError("charging energy must be positive", field="readout.U")

    def default_grid(self, n=401, half_width=200.0):
        return np.linspace(self.U - half_width, self.U + half_width, n)


def _annihilators(n_modes=len(MODES)):
    """Jordan-Wigner c_k on the 2^n Fock space, mode 0 most significant."""
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    ops = []
    for k in range(n_modes):
        m = np.ones((1, 1))
        for j in range(n_modes):
            m = np.kron(m, z if j < k else (a if j == k else eye))
        ops.append(m)
    return ops


def _occupations(n_modes=len(MODES)):
    idx = np.arange(2 ** n_modes)
    return np.array([(idx >> (n_modes - 1 - k)) & 1 for k in range(n_modes)]).T  # |1> = occupied


def _pieces(p: ReadoutParams):
    """(number-operator energies per mode, hopping matrix, on-site U matrix, n_L - n_R)."""
    c = _annihilators()
    # |1> in the JW factor corresponds to "occupied": a = |0><1|
    n = [ck.T @ ck for ck in c]
    zl = {"L": p.zeeman_l, "R": p.zeeman_r}
    vl = {"L": p.valley_l, "R": p.valley_r}
    single = np.zeros_like(n[0])
    for k, (d, v, s) in enumerate(MODES):
        e = 0.5 * zl[d] * (1 if s == "u" else -1) + 0.5 * vl[d] * (1 if v == "+" else -1)
        single = single + e * n[k]
    hop = np.zeros_like(n[0])
    for v, s in product(VALLEYS, SPINS):
        kl, kr = MODES.index(("L", v, s)), MODES.index(("R", v, s))
        h = c[kr].T @ c[kl]
        hop = hop + h + h.T
    n_dot = {d: sum(n[k] for k, m in enumerate(MODES) if m[0] == d) for d in DOTS}
    coulomb = sum(0.5 * nd @ (nd - np.eye(nd.shape[0])) for nd in n_dot.values())
    imbalance = n_dot["L"] - n_dot["R"]
    return single, hop, coulomb, imbalance


def basis_states():
    """Two-electron Fock indices in (1,1) or (0,2), with their occupied modes."""
    occ = _occupations()
    left = occ[:, [k for k, m in enumerate(MODES) if m[0] == "L"]].sum(1)
    keep = np.where((occ.sum(1) == 2) & (left <= 1))[0]
    return keep, [tuple(MODES[k] for k in np.flatnonzero(occ[i])) for i in keep]


def state_label(modes):
    return " ".join(f"{d}{v}{s}" for d, v, s in modes)


def two_electron_hamiltonian(p: ReadoutParams, eps: float):
    """Matrix of the two-electron Hamiltonian on the (1,1)+(0,2) basis."""
    single, hop, coulomb, imb = _pieces(p)
    keep, _ = basis_states()
    h = 0.5 * eps * imb + p.U * coulomb + p.t * hop + single
    return h[np.ix_(keep, keep)]


@dataclass
class ReadoutSpectrum:
    eps: np.ndarray
    energies: np.ndarray  # (n_eps, n_states), followed within blocks
    sector: list  # (n_up, n_plus) of each followed level
    start_state: list  # dominant basis label at the first grid point
    end_charge: list  # "(1,1)" or "(0,2)" at the last grid point
    labels: list = field(default_factory=list, repr=False)

    def connections(self):
        return dict(zip(self.start_state, self.end_charge))


def valley_readout_spectrum(params: ReadoutParams = ReadoutParams(), eps_grid=None) -> ReadoutSpectrum:
    eps_grid = params.default_grid() if eps_grid is None else np.asarray(eps_grid, dtype=float)
    keep, modes = basis_states()
    labels = [state_label(m) for m in modes]
    n_up = np.array([sum(s == "u" for _, _, s in m) for m in modes])
    n_plus = np.array([sum(v == "+" for _, v, _ in m) for m in modes])
    is_02 = np.array([all(d == "R" for d, _, _ in m) for m in modes])
    blocks = {}
    for i, key in enumerate(zip(n_up, n_plus)):
        blocks.setdefault(tuple(int(x) for x in key), []).append(i)

    single, hop, coulomb, imb = _pieces(params)
    sub = [m[np.ix_(keep, keep)] for m in (single, hop, coulomb, imb)]
    energies = np.empty((eps_grid.size, len(keep)))
    sector, start, end = [], [], []
    col = 0
    for key in sorted(blocks):
        idx = blocks[key]
        vecs_first = vecs_last = None
        for j, e in enumerate(eps_grid):
            h = sub[0] + params.t * sub[1] + params.U * sub[2] + 0.5 * e * sub[3]
            w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
            energies[j, col:col + len(idx)] = w
            if j == 0:
                vecs_first = v
            vecs_last = v
        for k in range(len(idx)):
            sector.append(key)
            start.append(labels[idx[int(np.argmax(np.abs(vecs_first[:, k])))]])
            w02 = float(np.sum(np.abs(vecs_last[is_02[idx], k]) ** 2))
            end.append("(0,2)" if w02 > 0.5 else "(1,1)")
        col += len(idx)
    return ReadoutSpectrum(eps_grid, energies, sector, start, end, labels)


def highlighted_connections(params: ReadoutParams = ReadoutParams(), eps_grid=None):
    """Fate of the four (1,1) states with the ancilla (right) electron in its ground state R-d."""
    conn = valley_readout_spectrum(params, eps_grid).connections()
    return {k: v for k, v in conn.items() if k.endswith("R-d") and k.startswith("L")}
