"""Bulk modes of the magnetized plasma.

For in-plane propagation (k ⊥ bias) the fields split into TE (E ∥ z) and TM
(H ∥ z) families. The TM dispersion k²c² = ε_eff ω² with
ε_eff = (ε11² − ε12²)/ε11 becomes, after clearing denominators and writing
y = ω² − ωc², P = ωp²(k) and K = k²c²,

    y² − (2P + K − ωc²) y + P (P + K − 2ωc²) = 0.

Its two roots are the lower band, in [−ωc², P], and the upper band, in
[P, 2P + K]. The discriminant equals (K − ωc²)² + 4Pωc², a sum of
non-negative terms, so the stable quadratic formula gives both roots to
full precision, including where they nearly touch (ωc → 0, k → 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import _kernels
from .constants import C0, EPS0, ETA0, MU0
from .emcore import _as_k3, six_vector
from .errors import (BandNotFound, DegenerateDenominator, EvanescentBranch,
                     NoRootInBracket)
from .media import PlasmaParams, plasma_components

__all__ = [
    "DispersionSample",
    "PolarState",
    "tm_effective_eps",
    "solve_bulk_band",
    "tm_band_frequencies",
    "tm_envelope",
    "tm_envelope_polar",
    "te_envelope",
    "faraday_wavenumbers",
    "polar_state",
    "instantaneous_field",
    "tm_gap",
]

_LOWER = ("lower", 0)
_UPPER = ("upper", 1)


@dataclass(frozen=True)
class DispersionSample:
    k_mag: float
    omega: float
    band: str | int
    polarization: str
    detuning: float | None = None  # ω² − ωc², kept for precision near the cyclotron line


@dataclass(frozen=True)
class PolarState:
    """Azimuthal-frame TM state: E = E_φ (φ̂ + ratio_r r̂) with k along r̂."""

    E_phi: complex
    ratio_r: complex
    k: float
    omega: float


def _band_is_upper(band) -> bool:
    if band in _UPPER:
        return True
    if band in _LOWER:
        return False
    raise BandNotFound(f"TM band must be 'lower' or 'upper', got {band!r}")


def tm_effective_eps(p, omega: float, k=None) -> float:
    """(ε11² − ε12²)/ε11 of the TM family."""
    e11, e12, _ = p.components(omega, k)
    if e11 == 0.0:
        raise DegenerateDenominator("epsilon_11 = 0: effective permittivity undefined")
    return float((e11 * e11 - e12 * e12) / e11)


def tm_band_frequencies(model, k_mag, band):
    """Vectorized TM band: returns (ω, y = ω² − ωc²) for an array of |k|."""
    upper = _band_is_upper(band)
    k_mag = np.asarray(k_mag, dtype=float)
    P = np.broadcast_to(model.wp2(k_mag), k_mag.shape)
    K = (k_mag * C0) ** 2
    wc2 = model.omega_c ** 2
    y = _kernels.tm_band_y(P, K, wc2, upper)
    omega = np.sqrt(wc2 + y)
    return omega, y


def _tm_relative_residual(P, K, wc2, y) -> float:
    B = 2.0 * P + K - wc2
    C = P * (P + K - 2.0 * wc2)
    val = y * (y - B) + C
    scale = y * y + abs(B * y) + abs(C)
    return abs(val) / scale if scale > 0 else abs(val)


def _cp_residual(omega, model, k_mag, sign):
    # Cleared form of k²c² = ω²(ε11 ∓ ε12): (ω² − K)(ω ± ωc) − Pω.
    P = float(model.wp2(k_mag))
    K = (k_mag * C0) ** 2
    return (omega * omega - K) * (omega + sign * model.omega_c) - P * omega


def _cp_roots(model, k_mag, sign):
    wp, wc = model.omega_p, abs(model.omega_c)
    hi = max(10.0 * np.hypot(wp, wc), 10.0 * k_mag * C0)
    grid = np.geomspace(1e-4 * wp, hi, 4001)
    vals = _cp_residual(grid, model, k_mag, sign)
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
        a, b = grid[i], grid[i + 1]
        if vals[i] == 0.0:
            roots.append(a)
            continue
        if vals[i + 1] == 0.0:
            continue
        roots.append(brentq(_cp_residual, a, b, args=(model, k_mag, sign),
                            xtol=1e-300, rtol=1e-15, maxiter=500))
    return sorted(set(roots))


def solve_bulk_band(model, k_mag: float, band="upper", polarization: str = "TM") -> DispersionSample:
    """ω on one bulk band at wavenumber |k|.

    TM bands come from the closed-form roots in y; TE has
    ω² = ωp²(k) + k²c²; the circularly polarized branches along the bias
    (``CP+``: ε11 − ε12, ``CP-``: ε11 + ε12) use a log-spaced scan plus Brent
    refinement, with ``band`` the index of the root in ascending order.
    """
    k_mag = float(k_mag)
    if not np.isfinite(k_mag) or k_mag < 0.0:
        raise ValueError(f"k_mag must be a non-negative number, got {k_mag!r}")
    pol = polarization.upper()
    if pol == "TM":
        omega, y = tm_band_frequencies(model, np.array([k_mag]), band)
        omega, y = float(omega[0]), float(y[0])
        P = float(model.wp2(k_mag))
        if not np.isfinite(omega) or omega <= 0.0 or \
                _tm_relative_residual(P, (k_mag * C0) ** 2, model.omega_c ** 2, y) > 1e-10:
            raise NoRootInBracket(f"no TM {band} root at k={k_mag:.6e}")
        return DispersionSample(k_mag, omega, "upper" if _band_is_upper(band) else "lower",
                                "TM", y)
    if pol == "TE":
        omega = float(np.sqrt(model.wp2(k_mag) + (k_mag * C0) ** 2))
        return DispersionSample(k_mag, omega, 0, "TE", omega * omega - model.omega_c ** 2)
    if pol in ("CP+", "CP-", "CP−"):
        sign = 1.0 if pol == "CP+" else -1.0
        roots = _cp_roots(model, k_mag, sign)
        idx = int(band)
        if idx >= len(roots) or idx < 0:
            raise NoRootInBracket(f"{pol} band {idx} not found at k={k_mag:.6e}")
        return DispersionSample(k_mag, float(roots[idx]), idx, "CP+" if sign > 0 else "CP-")
    raise BandNotFound(f"unknown polarization {polarization!r}")


def _inv_eps_xy(e11, e12):
    det = e11 * e11 - e12 * e12
    if abs(det) <= 1e-14 * (e11 * e11 + e12 * e12) or det == 0.0:
        raise DegenerateDenominator("epsilon_11^2 = epsilon_12^2: TM envelope undefined")
    return np.array([[e11, -1j * e12], [1j * e12, e11]]) / det


def tm_envelope(p, k, omega: float, detuning: float | None = None) -> np.ndarray:
    """TM six-vector with H_z = 1 A/m and E = ε⁻¹(ẑ×k)/(ε0 ω)."""
    k3 = _as_k3(k)
    kk = float(np.hypot(k3[0], k3[1]))
    e11, e12, _ = p.components(omega, k3, detuning)
    inv = _inv_eps_xy(float(e11), float(e12))
    zxk = np.array([-k3[1], k3[0]])
    exy = inv @ zxk / (EPS0 * omega)
    return six_vector([exy[0], exy[1], 0.0], [0.0, 0.0, 1.0])


def tm_envelope_polar(p, k_mag: float, omega: float) -> tuple[complex, complex]:
    """(E_φ, E_r) of the H_z = 1 envelope for k along r̂."""
    e11, e12, _ = p.components(omega, [k_mag, 0.0])
    det = e11 * e11 - e12 * e12
    if det == 0.0:
        raise DegenerateDenominator("epsilon_11^2 = epsilon_12^2")
    scale = k_mag / (EPS0 * omega * det)
    return complex(e11 * scale), complex(-1j * e12 * scale)


def te_envelope(k, omega: float) -> np.ndarray:
    """TE six-vector with E_z = 1 V/m and H = (k×ẑ)/(μ0 ω)."""
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    k3 = _as_k3(k)
    h = np.cross(k3, [0.0, 0.0, 1.0]) / (MU0 * omega)
    return six_vector([0.0, 0.0, 1.0], h)


def faraday_wavenumbers(p, omega: float, allow_evanescent: bool = False):
    """Circular-wave constants for propagation along the bias.

    Returns (k₊, k₋, k_z, Y₊, Y₋) with k± = k0 √(ε11 ∓ ε12), k_z their mean
    and Y± = √(ε11 ∓ ε12)/η0. An evanescent branch raises unless
    ``allow_evanescent`` is set, in which case the principal complex root is
    returned.
    """
    e11, e12, _ = p.components(omega)
    k0 = omega / C0
    rad = (float(e11 - e12), float(e11 + e12))
    if not allow_evanescent:
        for name, r in zip(("+", "-"), rad):
            if r < 0.0:
                raise EvanescentBranch(f"CP{name} branch is evanescent at omega={omega:.6e}")
    roots = [np.sqrt(complex(r)) if r < 0.0 else np.sqrt(r) for r in rad]
    kp, km = (k0 * r for r in roots)
    return kp, km, 0.5 * (kp + km), roots[0] / ETA0, roots[1] / ETA0


def polar_state(p, omega: float, E_phi: complex = 1.0) -> PolarState:
    """TM bulk state at ω in the azimuthal frame; needs ε_eff > 0."""
    e11, e12, _ = p.components(omega)
    eeff = tm_effective_eps(p, omega)
    if eeff <= 0.0:
        raise EvanescentBranch(f"epsilon_eff = {eeff:.6g} <= 0: no propagating TM mode")
    k = omega / C0 * np.sqrt(eeff)
    return PolarState(E_phi=complex(E_phi), ratio_r=complex(-1j * e12 / e11), k=float(k),
                      omega=float(omega))


def instantaneous_field(state: PolarState, t: float, r: float) -> np.ndarray:
    """Real field (E_r, E_φ, E_z) a distance r along k at time t.

    θ = ωt − kr and E = Re{E_φ e^{iθ}} φ̂ + Re{E_φ ratio_r e^{iθ}} r̂, which for
    real E_φ is E_φ(cos θ φ̂ + (ε12/ε11) sin θ r̂).
    """
    phase = np.exp(1j * (state.omega * t - state.k * r))
    e_phi = (state.E_phi * phase).real
    e_r = (state.E_phi * state.ratio_r * phase).real
    return np.array([e_r, e_phi, 0.0])


def tm_gap(model, k_samples: int = 4001) -> tuple[float, float]:
    """TM band gap (top of lower band, bottom of upper band) in rad/s.

    The lower band is maximized over |k| on a log grid and then refined; the
    upper band minimum sits at k = 0.
    """
    scale = max(model.omega_p, abs(model.omega_c)) / C0
    ks = np.concatenate([[0.0], np.geomspace(1e-6 * scale, 1e6 * scale, k_samples)])
    low, _ = tm_band_frequencies(model, ks, "lower")
    up, _ = tm_band_frequencies(model, ks, "upper")
    i = int(np.nanargmax(low))
    lo_edge = float(low[i])
    if 0 < i < ks.size - 1:
        res = minimize_scalar(lambda q: -tm_band_frequencies(model, np.array([q]), "lower")[0][0],
                              bounds=(ks[i - 1], ks[i + 1]), method="bounded",
                              options={"xatol": 1e-12 * ks[i]})
        lo_edge = max(lo_edge, -float(res.fun))
    return lo_edge, float(np.nanmin(up))
