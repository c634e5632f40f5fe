"""Time every kernel under the numba and numpy backends and check they agree.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from qlink import kernels


def _cases(rng):
    n = 10
    rho = kernels.new_register(n)
    u2 = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    h0 = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h0 = h0 + h0.conj().T
    hv = np.diag(rng.normal(size=8)).astype(complex)
    values = np.linspace(-800, 800, 2000)
    decay = np.exp(-1 / np.logspace(0, 3, 1000))
    amp = np.sqrt(1 - decay ** 2)
    normals = rng.normal(size=(1000, 1000))
    return {
        "apply_unitary (10 qubits, 2q gate)": lambda: kernels.apply_unitary(rho.copy(), u2, [3, 7], n),
        "depolarize (10 qubits, 2q)": lambda: kernels.depolarize(rho.copy(), 0.01, [3, 7], n),
        "partial_trace (10 -> 6 qubits)": lambda: kernels.partial_trace(rho, [0, 2, 4, 6], n),
        "sweep_product (8x8, 2000 steps)": lambda: kernels.sweep_product(h0 * 1e-3, hv, values, 1e-3),
        "ou_sum (1000 processes x 1000 steps)": lambda: kernels.ou_sum(decay, amp, np.zeros(1000), normals),
    }


def bench(repeat):
    rng = np.random.default_rng(0)
    cases = _cases(rng)
    results = {}
    for name in ("numba", "numpy"):
        kernels.use_backend(name)
        for label, fn in cases.items():
            out = fn()  # warm-up, includes jit compilation
            t0 = time.perf_counter()
            for _ in range(repeat):
                fn()
            results[(label, name)] = ((time.perf_counter() - t0) / repeat, np.asarray(out))
    print(f"{'kernel':40s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s} {'max diff':>9s}")
    for label in cases:
        (tj, a), (tn, b) = results[(label, "numba")], results[(label, "numpy")]
        print(f"{label:40s} {tj * 1e3:11.3f} {tn * 1e3:11.3f} {tn / tj:8.2f} {np.abs(a - b).max():9.1e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    bench(ap.parse_args().repeat)
