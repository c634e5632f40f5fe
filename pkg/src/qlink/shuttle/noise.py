"""1/f-like detuning noise from a sum of Ornstein-Uhlenbeck processes.

Times in ns, energies in micro-eV, spectral densities in ueV^2/Hz (one-sided).
Each process k has correlation time tau_k (log-spaced) and the same variance
sigma^2, so S(f) = sum_k 4 sigma^2 tau_k / (1 + (2 pi f tau_k)^2), which falls
off as 1/f between 1/(2 pi tau_max) and 1/(2 pi tau_min).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import periodogram

from .. import kernels
from ..errors import ConfigurationError
from ..rng import as_generator

NS = 1e-9


def ou_times(n_processes=1000, tau_min=1.0, tau_max=1e6):
    if not 0 < tau_min < tau_max:
        raise ConfigurationError("need 0 < tau_min < tau_max", field="noise.tau")
    return np.geomspace(tau_min, tau_max, n_processes)


def spectrum_model(f_hz, taus_ns, variance):
    """One-sided PSD of the OU sum at frequencies f (Hz)."""
    tau = np.asarray(taus_ns) * NS
    f = np.atleast_1d(np.asarray(f_hz, dtype=float))[:, None]
    return (4.0 * variance * tau / (1.0 + (2 * np.pi * f * tau) ** 2)).sum(axis=1)


def process_variance(s_ref, taus_ns, f_ref=1e6):
    """Per-process variance that puts the summed PSD on the line s_ref * f_ref / f.

    The match is made at the geometric centre of the 1/f band, so the
    normalization holds even when f_ref itself lies outside the band.
    """
    taus = np.asarray(taus_ns)
    f_c = 1.0 / (2 * np.pi * np.sqrt(taus.min() * taus.max()) * NS)
    return float(s_ref * f_ref / f_c / spectrum_model(f_c, taus, 1.0)[0])


@dataclass
class NoiseTrace:
    """Sampled detuning offset; calling it interpolates linearly in time."""
    times: np.ndarray
    values: np.ndarray
    offset: float = 0.0
    meta: dict = field(default_factory=dict, repr=False)

    def __call__(self, t):
        return np.interp(np.asarray(t) + self.offset, self.times, self.values)

    def shifted(self, offset):
        return NoiseTrace(self.times, self.values, self.offset + offset, self.meta)


def charge_noise_trace(seed, n_processes=1000, s_1mhz=1e-6, duration=100.0, dt=0.1,
                       tau_min=None, tau_max=None, label="charge", realization=0) -> NoiseTrace:
    """One realization of the OU sum on [0, duration] with spacing dt (ns).

    Correlation times default to the band the trace can represent, from dt up
    to the duration. Processes start from their stationary distribution. The
    update is the exact OU transition, but dt must still resolve tau_min.
    """
    tau_min = dt if tau_min is None else tau_min
    tau_max = max(duration, 2 * tau_min) if tau_max is None else tau_max
    if dt <= 0 or duration <= 0:
        raise ConfigurationError("duration and dt must be positive", field="noise.dt")
    if dt > tau_min:
        raise ConfigurationError(f"dt={dt} ns does not resolve the fastest process (tau_min={tau_min} ns)",
                                 field="noise.dt")
    if s_1mhz < 0:
        raise ConfigurationError("noise spectral density must be >= 0", field="noise.s_1mhz")
    n_steps = int(np.ceil(duration / dt))
    times = np.arange(n_steps + 1) * dt
    if s_1mhz == 0:
        return NoiseTrace(times, np.zeros(n_steps + 1), meta={"variance": 0.0})
    taus = ou_times(n_processes, tau_min, tau_max)
    var = process_variance(s_1mhz, taus)
    rng = as_generator(seed, "noise", label, realization)
    decay = np.exp(-dt / taus)
    amp = np.sqrt(var * (1.0 - decay ** 2))
    x0 = rng.normal(0.0, np.sqrt(var), size=n_processes)
    normals = rng.standard_normal((n_steps, n_processes))
    values = kernels.ou_sum(decay, amp, x0, normals)
    return NoiseTrace(times, values, meta={"variance": var, "taus": taus})


def estimate_spectrum(traces, dt):
    """Mean one-sided periodogram (ueV^2/Hz) of equally spaced traces, dt in ns."""
    arr = np.atleast_2d(np.asarray(traces, dtype=float))
    f, p = periodogram(arr, fs=1.0 / (dt * NS), axis=-1, detrend="constant")
    return f, p.mean(axis=0)


def spectrum_at(seed, f_hz=1e6, n_realizations=100, duration=4000.0, dt=1.0, band=0.25, **kw):
    """Periodogram estimate averaged over realizations and a relative band around f_hz."""
    traces = [charge_noise_trace(seed, realization=k, duration=duration, dt=dt, **kw).values
              for k in range(n_realizations)]
    f, p = estimate_spectrum(traces, dt)
    sel = (f >= f_hz * (1 - band)) & (f <= f_hz * (1 + band))
    if not sel.any():
        raise ConfigurationError("trace too short to resolve the requested frequency", field="noise.duration")
    return float(p[sel].mean())
