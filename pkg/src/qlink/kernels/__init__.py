"""Hot loops with two interchangeable implementations.

The numba path is used when numba imports and ``QLINK_DISABLE_NUMBA`` is unset
(or "0"). Otherwise the numpy reference path runs. ``use_backend`` switches at
runtime, mostly for the benchmark and the equivalence tests.

Qubit 0 is the most significant bit of a register index.
"""
import os

import numpy as np

from . import _ref

try:
    from . import _jit
except ImportError:  # pragma: no cover - numba is a hard dependency but be forgiving
    _jit = None

_impl = None


def _want_numba():
    flag = os.environ.get("QLINK_DISABLE_NUMBA", "0").strip().lower()
    return _jit is not None and flag in ("", "0", "false", "no")


def use_backend(name):
    """Select ``"numba"`` or ``"numpy"`` for all kernels."""
    global _impl
    if name == "numba":
        if _jit is None:
            raise RuntimeError("numba is not available")
        _impl = _jit
    elif name == "numpy":
        _impl = _ref
    else:
        raise ValueError(f"unknown kernel backend {name!r}")


def backend():
    return "numba" if _impl is _jit else "numpy"


use_backend("numba" if _want_numba() else "numpy")


def _q(qubits):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(qubits, dtype=np.int64)))


def apply_unitary(rho, u, qubits, n):
    """rho -> U rho U^dagger with U acting on ``qubits`` (in that order).

    May modify ``rho`` in place; always use the returned array.
    """
    q = _q(qubits)
    u = np.ascontiguousarray(u, dtype=np.complex128)
    if u.shape != (2 ** q.size,) * 2:
        raise ValueError("gate shape does not match its support")
    return _impl.apply_unitary(rho, u, q, n)


def depolarize(rho, p, qubits, n):
    """rho -> (1-p) rho + p * Tr_S(rho) (x) I_S / d_S on the support S."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability {p} outside [0, 1]")
    return _impl.depolarize(rho, float(p), _q(qubits), n)


def partial_trace(rho, qubits, n):
    """Trace out ``qubits``; remaining qubits keep their relative order."""
    return _impl.partial_trace(np.ascontiguousarray(rho, dtype=np.complex128), _q(qubits), n)


def sweep_product(h0, hv, values, dt):
    """Time-ordered product of exp(-i (h0 + v_k hv) dt), first value acting first."""
    return _impl.sweep_product(
        np.ascontiguousarray(h0, dtype=np.complex128),
        np.ascontiguousarray(hv, dtype=np.complex128),
        np.ascontiguousarray(values, dtype=np.float64),
        float(dt),
    )


def ou_sum(decay, amp, x0, normals):
    """Run many OU recursions side by side and return their sum at every step."""
    return _impl.ou_sum(
        np.ascontiguousarray(decay, dtype=np.float64),
        np.ascontiguousarray(amp, dtype=np.float64),
        np.ascontiguousarray(x0, dtype=np.float64),
        np.ascontiguousarray(normals, dtype=np.float64),
    )


def new_register(n):
    """|0...0><0...0| on n qubits."""
    rho = np.zeros((2 ** n, 2 ** n), dtype=np.complex128)
    rho[0, 0] = 1.0
    return rho
