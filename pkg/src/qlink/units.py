"""Physical constants and unit helpers.

Conventions used across the package:

* shuttle / readout energies in micro-eV, times in ns, propagators use HBAR_UEV_NS;
* cavity-side frequencies in MHz are angular rates in rad/us, so an energy E (MHz)
  over a time t (ns) accumulates a phase E * t * 1e-3 (no 2*pi);
* dissipative rates are stored in 1/us alongside the cavity frequencies.
"""
from scipy import constants as _c

HBAR_UEV_NS = _c.hbar / _c.e * 1e6 * 1e9  # 0.6582 ueV*ns
UEV_TO_MHZ = _c.e * 1e-6 / _c.h / 1e6  # 241.799 MHz per ueV
NS_PER_US = 1e3


def mhz_ns_phase(energy_mhz, t_ns):
    """Dimensionless phase accumulated by a cavity-side energy over a time."""
    return energy_mhz * t_ns * 1e-3


def ueV_to_mhz(e):
    return e * UEV_TO_MHZ


def mhz_to_ueV(f):
    return f / UEV_TO_MHZ


def dephasing_rate(t2_ns):
    """Lindblad rate 1/(2 T2) for a sigma_z dephasing term, in 1/us."""
    if t2_ns is None or t2_ns == float("inf"):
        return 0.0
    if t2_ns <= 0:
        raise ValueError("T2 must be positive")
    return NS_PER_US / (2.0 * t2_ns)
