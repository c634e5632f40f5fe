import numpy as np
import pytest
from hypothesis import given, strategies as st

from qlink import kernels
from qlink.qmath import random_density_matrix, random_unitary

seeds = st.integers(0, 2 ** 31 - 1)


@pytest.fixture(autouse=True)
def _restore_backend():
    before = kernels.backend()
    yield
    kernels.use_backend(before)


def _dense(u, qubits, n):
    """Full-register matrix of ``u`` on ``qubits`` via index bookkeeping."""
    d = 2 ** n
    k = len(qubits)
    full = np.zeros((d, d), complex)
    for col in range(d):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub = int("".join(str(bits[q]) for q in qubits), 2)
        for row_sub in range(2 ** k):
            out = list(bits)
            for j, q in enumerate(qubits):
                out[q] = (row_sub >> (k - 1 - j)) & 1
            full[int("".join(map(str, out)), 2), col] += u[row_sub, sub]
    return full


@pytest.mark.parametrize("name", ["numba", "numpy"])
@given(seed=seeds)
def test_apply_unitary_matches_dense(name, seed):
    kernels.use_backend(name)
    rng = np.random.default_rng(seed)
    n = 4
    qubits = list(rng.choice(n, size=2, replace=False))
    u = random_unitary(4, rng)
    rho = random_density_matrix(2 ** n, rng)
    big = _dense(u, qubits, n)
    out = kernels.apply_unitary(rho.copy(), u, qubits, n)
    assert np.allclose(out, big @ rho @ big.conj().T, atol=1e-12)


@given(seed=seeds, p=st.floats(0, 1))
def test_backends_agree(seed, p):
    rng = np.random.default_rng(seed)
    n = 3
    rho = random_density_matrix(8, rng)
    u = random_unitary(2, rng)
    out = {}
    for name in ("numba", "numpy"):
        kernels.use_backend(name)
        a = kernels.apply_unitary(rho.copy(), u, [1], n)
        b = kernels.depolarize(a.copy(), p, [0, 2], n)
        c = kernels.partial_trace(b, [1], n)
        out[name] = (a, b, c)
    for x, y in zip(out["numba"], out["numpy"]):
        assert np.allclose(x, y, atol=1e-13)


@given(seed=seeds, p=st.floats(0, 1))
def test_depolarize_definition_and_trace(seed, p):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(4, rng)
    out = kernels.depolarize(rho.copy(), p, [1], 2)
    red = rho.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
    want = (1 - p) * rho + p * np.kron(red, np.eye(2) / 2)
    assert np.allclose(out, want, atol=1e-13)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)


def test_depolarize_rejects_bad_probability():
    with pytest.raises(ValueError):
        kernels.depolarize(np.eye(2) / 2, 1.5, [0], 1)


def test_sweep_product_and_ou_sum_agree():
    rng = np.random.default_rng(0)
    h0 = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h0 = h0 + h0.conj().T
    hv = np.diag(rng.normal(size=4)).astype(complex)
    vals = np.linspace(-1, 1, 50)
    decay = np.array([0.9, 0.5])
    amp = np.sqrt(1 - decay ** 2)
    normals = rng.normal(size=(30, 2))
    res = {}
    for name in ("numba", "numpy"):
        kernels.use_backend(name)
        res[name] = (kernels.sweep_product(h0, hv, vals, 0.01), kernels.ou_sum(decay, amp, np.zeros(2), normals))
    assert np.allclose(res["numba"][0], res["numpy"][0], atol=1e-12)
    assert np.allclose(res["numba"][1], res["numpy"][1], atol=1e-12)
    u = res["numpy"][0]
    assert np.allclose(u @ u.conj().T, np.eye(4), atol=1e-12)


def test_environment_flag_selects_numpy(monkeypatch):
    monkeypatch.setenv("QLINK_DISABLE_NUMBA", "1")
    assert not kernels._want_numba()
    monkeypatch.setenv("QLINK_DISABLE_NUMBA", "0")
    assert kernels._want_numba()
