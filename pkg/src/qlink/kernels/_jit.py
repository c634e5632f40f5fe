"""numba kernels. Density-matrix kernels mutate ``rho`` in place and return it."""
import numpy as np
from numba import njit


@njit(cache=True)
def _offsets(qubits, n):
    k = qubits.shape[0]
    off = np.zeros(2 ** k, dtype=np.int64)
    for a in range(2 ** k):
        o = 0
        for j in range(k):
            if (a >> (k - 1 - j)) & 1:
                o |= 1 << (n - 1 - qubits[j])
        off[a] = o
    return off


@njit(cache=True)
def _support_mask(qubits, n):
    m = 0
    for j in range(qubits.shape[0]):
        m |= 1 << (n - 1 - qubits[j])
    return m


@njit(cache=True)
def apply_unitary(rho, u, qubits, n):
    dim = rho.shape[0]
    off = _offsets(qubits, n)
    kk = off.shape[0]
    mask = _support_mask(qubits, n)
    uc = np.conj(u)
    v = np.empty(kk, dtype=np.complex128)
    for base in range(dim):
        if base & mask:
            continue
        for j in range(dim):
            for a in range(kk):
                v[a] = rho[base | off[a], j]
            for b in range(kk):
                s = 0j
                for a in range(kk):
                    s += u[b, a] * v[a]
                rho[base | off[b], j] = s
    for i in range(dim):
        for base in range(dim):
            if base & mask:
                continue
            for a in range(kk):
                v[a] = rho[i, base | off[a]]
            for b in range(kk):
                s = 0j
                for a in range(kk):
                    s += v[a] * uc[b, a]
                rho[i, base | off[b]] = s
    return rho


@njit(cache=True)
def depolarize(rho, p, qubits, n):
    if p == 0.0:
        return rho
    dim = rho.shape[0]
    off = _offsets(qubits, n)
    kk = off.shape[0]
    mask = _support_mask(qubits, n)
    keep = 1.0 - p
    for rb in range(dim):
        if rb & mask:
            continue
        for cb in range(dim):
            if cb & mask:
                continue
            tr = 0j
            for a in range(kk):
                tr += rho[rb | off[a], cb | off[a]]
            for a in range(kk):
                for b in range(kk):
                    rho[rb | off[a], cb | off[b]] *= keep
            add = p * tr / kk
            for a in range(kk):
                rho[rb | off[a], cb | off[a]] += add
    return rho


@njit(cache=True)
def partial_trace(rho, qubits, n):
    off = _offsets(qubits, n)
    mask = _support_mask(qubits, n)
    m = n - qubits.shape[0]
    dk = 2 ** m
    kept = np.empty(dk, dtype=np.int64)
    c = 0
    for full in range(rho.shape[0]):
        if full & mask:
            continue
        kept[c] = full
        c += 1
    out = np.zeros((dk, dk), dtype=np.complex128)
    for i in range(dk):
        for j in range(dk):
            s = 0j
            for a in range(off.shape[0]):
                s += rho[kept[i] | off[a], kept[j] | off[a]]
            out[i, j] = s
    return out


@njit(cache=True)
def sweep_product(h0, hv, values, dt):
    d = h0.shape[0]
    u = np.eye(d, dtype=np.complex128)
    for k in range(values.shape[0]):
        w, v = np.linalg.eigh(h0 + values[k] * hv)
        ph = np.exp(-1j * w * dt)
        step = (v * ph) @ np.conj(v).T
        u = step @ u
    return u


@njit(cache=True)
def ou_sum(decay, amp, x0, normals):
    n_steps, n_proc = normals.shape
    out = np.empty(n_steps + 1)
    x = x0.copy()
    out[0] = x.sum()
    for k in range(n_steps):
        s = 0.0
        for j in range(n_proc):
            x[j] = decay[j] * x[j] + amp[j] * normals[k, j]
            s += x[j]
        out[k + 1] = s
    return out
