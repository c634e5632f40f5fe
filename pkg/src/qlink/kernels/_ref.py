"""Pure-numpy reference kernels.

Same call signatures as the jitted versions in ``_jit``. These allocate new
arrays instead of working in place, so callers always use the return value.
"""
import numpy as np


def _split(rho, qubits, n):
    # view rho as a (2,)*2n tensor, return it plus the axis indices of qubits
    t = rho.reshape((2,) * (2 * n))
    return t, list(qubits), [n + q for q in qubits]


def apply_unitary(rho, u, qubits, n):
    k = len(qubits)
    t, rows, cols = _split(rho, qubits, n)
    uk = u.reshape((2,) * (2 * k))
    # rows: U . rho
    t = np.tensordot(uk, t, axes=(list(range(k, 2 * k)), rows))
    t = np.moveaxis(t, list(range(k)), rows)
    # cols: rho . U^dagger
    t = np.tensordot(t, uk.conj(), axes=(cols, list(range(k, 2 * k))))
    t = np.moveaxis(t, list(range(2 * n - k, 2 * n)), cols)
    return np.ascontiguousarray(t.reshape(rho.shape))


def depolarize(rho, p, qubits, n):
    if p == 0.0:
        return rho
    k = len(qubits)
    t, rows, cols = _split(rho, qubits, n)
    # trace over the support, then re-insert the maximally mixed block
    others = [q for q in range(n) if q not in qubits]
    red = partial_trace(rho, qubits, n) if others else np.array([[np.trace(rho)]])
    m = len(others)
    red_t = red.reshape((2,) * (2 * m))
    eye = np.eye(2 ** k).reshape((2,) * (2 * k)) / 2 ** k
    full = np.multiply.outer(red_t, eye)
    # axes of full: others-rows, others-cols, support-rows, support-cols
    order = others + [n + q for q in others] + rows + cols
    inv = np.argsort(order)
    full = full.transpose(inv).reshape(rho.shape)
    return (1.0 - p) * rho + p * full


def partial_trace(rho, qubits, n):
    """Trace out ``qubits`` from an n-qubit density matrix."""
    t = rho.reshape((2,) * (2 * n))
    keep = [q for q in range(n) if q not in qubits]
    letters = list(range(2 * n))
    for q in qubits:
        letters[n + q] = letters[q]
    out = keep + [n + q for q in keep]
    r = np.einsum(t, letters, out)
    d = 2 ** len(keep)
    return r.reshape(d, d)


def sweep_product(h0, hv, values, dt):
    """Time-ordered product of exp(-i (h0 + v_k hv) dt) over the values v_k."""
    hs = h0[None, :, :] + values[:, None, None] * hv[None, :, :]
    w, v = np.linalg.eigh(hs)
    us = (v * np.exp(-1j * w * dt)[:, None, :]) @ v.conj().transpose(0, 2, 1)
    # pairwise reduction keeps the time order: later steps multiply from the left
    while us.shape[0] > 1:
        if us.shape[0] % 2:
            us = np.concatenate([us, np.eye(h0.shape[0])[None]], axis=0)
        us = us[1::2] @ us[0::2]
    return us[0]


def ou_sum(decay, amp, x0, normals):
    """Sum of independent OU recursions x <- decay*x + amp*n, one per column."""
    n_steps = normals.shape[0]
    out = np.empty(n_steps + 1)
    x = x0.copy()
    out[0] = x.sum()
    for k in range(n_steps):
        x = decay * x + amp * normals[k]
        out[k + 1] = x.sum()
    return out
