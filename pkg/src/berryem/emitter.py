"""Rotating isotropic emitter: far-field connection and angular-Doppler sidebands.

The far field is E = h(θ) e^{ig(φ)} θ̂. A polarization-matched receiver picks
up V ∝ e^{ig(φ)}, so rotating the emitter by dφ multiplies the voltage by
1 + i A_φ k0 dφ with A_φ = −(1/k0) ∂g/∂φ. A vibration dφ(t) = dφ0 cos Ωt thus
phase-modulates the carrier and puts lines at ω ± Ω.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import PerturbationTooLarge, ResolutionInsufficient

__all__ = [
    "FarFieldModel",
    "VoltageTrace",
    "SpectralLine",
    "farfield_connection",
    "rotated_voltage",
    "synthesize_vibration",
    "vibration_spectrum",
]

_DERIV_STEP = 1e-6
_MAX_ROTATION = 0.1


@dataclass(frozen=True)
class FarFieldModel:
    """Far-field pattern h(θ) e^{ig(φ)} along θ̂.

    ``dg`` is the analytic ∂g/∂φ when known; otherwise a central difference
    with step 1e-6 rad is used.
    """

    g: Callable[[float], float]
    h: Callable[[float], float] = lambda theta: 1.0
    dg: Callable[[float], float] | None = None

    @classmethod
    def vortex(cls, n: int) -> "FarFieldModel":
        return cls(g=lambda phi: n * phi, dg=lambda phi: float(n))


@dataclass(frozen=True)
class VoltageTrace:
    t: np.ndarray
    V: np.ndarray
    omega: float
    Omega: float
    dphi0: float


@dataclass(frozen=True)
class SpectralLine:
    offset_over_Omega: float
    amplitude: float
    rel_carrier_db: float


def farfield_connection(model: FarFieldModel, phi: float, k0: float) -> float:
    """A_φ = −(∂g/∂φ)/k0. The amplitude h(θ) plays no part."""
    if model.dg is not None:
        slope = float(model.dg(phi))
    else:
        slope = (model.g(phi + _DERIV_STEP) - model.g(phi - _DERIV_STEP)) / (2 * _DERIV_STEP)
    return -slope / k0


def rotated_voltage(V0: complex, A_phi: float, k0: float, dphi: float) -> complex:
    """First-order voltage V0(1 + i A_φ k0 dφ) after a small rotation dφ."""
    if abs(dphi) > _MAX_ROTATION:
        raise PerturbationTooLarge(f"|dphi| = {abs(dphi):.3g} rad exceeds {_MAX_ROTATION}")
    return complex(V0) * (1.0 + 1j * A_phi * k0 * dphi)


def synthesize_vibration(A_phi_k0: float, V0: float, omega: float, Omega: float,
                         dphi0: float, n_periods: int, samples_per_carrier: int = 16) -> VoltageTrace:
    """V(t) = V0 cos ωt − V0 sin(ωt) dγ(t), dγ = −A_φk0 dφ0 cos Ωt, over n_periods of Ω."""
    duration = n_periods * 2 * math.pi / Omega
    n = int(math.ceil(samples_per_carrier * omega * duration / (2 * math.pi)))
    t = np.arange(n) * (duration / n)
    dgamma = -A_phi_k0 * dphi0 * np.cos(Omega * t)
    v = V0 * np.cos(omega * t) - V0 * np.sin(omega * t) * dgamma
    return VoltageTrace(t=t, V=v, omega=omega, Omega=Omega, dphi0=dphi0)


def vibration_spectrum(model: FarFieldModel, V0: float, omega: float, Omega: float,
                       dphi0: float, duration: float, k0: float = 1.0, phi: float = 0.0,
                       floor_db: float = -120.0) -> list[SpectralLine]:
    """Spectral lines of the vibrating-emitter voltage relative to the carrier.

    The trace is cut to a whole number of Ω periods and analysed with a
    rectangular-window periodogram, which puts ω and ω ± Ω exactly on bins
    when ω/Ω is an integer. Lines at or above ``floor_db`` are returned
    with their offset from ω in units of Ω.
    """
    if not Omega < omega / 10.0:
        raise ResolutionInsufficient("vibration rate must satisfy Omega < omega/10")
    n_periods = int(math.floor(duration * Omega / (2 * math.pi) + 1e-9))
    if n_periods < 32:
        raise ResolutionInsufficient("need at least 32 vibration periods")
    ratio = omega / Omega
    if abs(ratio - round(ratio)) > 1e-9 * ratio:
        raise ResolutionInsufficient("omega/Omega must be an integer for leakage-free bins")
    a_k0 = farfield_connection(model, phi, k0) * k0
    trace = synthesize_vibration(a_k0, V0, omega, Omega, dphi0, n_periods)
    spec = np.abs(np.fft.rfft(trace.V)) * 2.0 / trace.V.size
    bin_hz = 2 * math.pi / (trace.t[1] * trace.V.size)  # rad/s per bin
    carrier_bin = int(round(omega / bin_hz))
    carrier = spec[carrier_bin]
    lines = []
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(spec / carrier)
    for i in np.flatnonzero(db >= floor_db):
        lines.append(SpectralLine((i - carrier_bin) * bin_hz / Omega, float(spec[i]),
                                  float(db[i])))
    return lines
