"""Surface plasmon-polaritons on a plasma / simple-medium interface.

Geometry: simple medium (ε_s) in y > 0, plasma in y < 0, propagation along
x with e^{i k x}. Fields decay as e^{−α_s y} above and e^{α_p y} below, with
α_s = k0 √((k/k0)² − ε_s) and α_p = k0 √((k/k0)² − ε_eff). Continuity of
H_z and E_x gives

    α_s/ε_s + α_p/ε_eff = ε12 k / (ε11 ε_eff).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .bulk import tm_gap
from .constants import C0, EPS0
from .errors import (BelowPlasmaFrequency, DegenerateDenominator, ImproperSheet,
                     NoSolution)
from .media import PlasmaParams

__all__ = [
    "SppSolution",
    "FieldProfile",
    "SppBandPoint",
    "PEC",
    "spp_residual",
    "spp_roots",
    "solve_spp",
    "pec_limit_spp",
    "spp_band",
    "spp_field_profile",
    "confinement_map",
    "edge_channel_count",
]

PEC = "pec"
SCAN_HALF_WIDTH = 40.0
SCAN_POINTS = 20_000
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class SppSolution:
    omega: float
    k_spp: float
    alpha_s: float
    alpha_p: float
    eps_s: float
    plasma: PlasmaParams

    @property
    def radiative(self) -> bool:
        """ε_s > 0: an interface discontinuity would radiate into the upper region."""
        return self.eps_s > 0.0


@dataclass(frozen=True)
class FieldProfile:
    y: np.ndarray
    Ex: np.ndarray
    Ey: np.ndarray
    Hz: np.ndarray

    @property
    def side(self) -> np.ndarray:
        return np.where(self.y >= 0.0, "s", "p")


@dataclass(frozen=True)
class SppBandPoint:
    omega: float
    k_spp: float
    alpha_s: float
    alpha_p: float
    group_velocity: float
    in_gap: bool


def _plasma_terms(omega, p):
    e11, e12, _ = p.components(omega)
    e11, e12 = float(e11), float(e12)
    if e11 == 0.0:
        raise DegenerateDenominator("epsilon_11 = 0 at this frequency")
    eeff = (e11 * e11 - e12 * e12) / e11
    if eeff == 0.0:
        raise DegenerateDenominator("epsilon_eff = 0 at this frequency")
    return e11, e12, eeff


def _decay(k, k0, eps):
    a = k0 * np.sqrt(complex((k / k0) ** 2 - eps))
    return a


def spp_residual(k_spp: float, omega: float, eps_s: float, p) -> float:
    """Left minus right side of the dispersion equation on the proper sheet."""
    e11, e12, eeff = _plasma_terms(omega, p)
    k0 = omega / C0
    a_s = _decay(k_spp, k0, eps_s)
    a_p = _decay(k_spp, k0, eeff)
    if a_s.real <= 0.0 or a_p.real <= 0.0:
        raise ImproperSheet(f"decay constant with Re <= 0 at k={k_spp:.6e}")
    val = a_s / eps_s + a_p / eeff - e12 * k_spp / (e11 * eeff)
    return float(val.real)


def _root_scale(k, k0, eps_s, e11, e12, eeff):
    a_s = k0 * math.sqrt((k / k0) ** 2 - eps_s)
    a_p = k0 * math.sqrt((k / k0) ** 2 - eeff)
    return abs(a_s / eps_s) + abs(a_p / eeff) + abs(e12 * k / (e11 * eeff))


def spp_roots(omega: float, eps_s: float, p, direction: int = +1,
              n_scan: int = SCAN_POINTS // 2, half_width: float = SCAN_HALF_WIDTH) -> list[SppSolution]:
    """Every proper-sheet root with sign(k) = direction found on the scan grid."""
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    e11, e12, eeff = _plasma_terms(omega, p)
    k0 = omega / C0
    q = np.linspace(0.0, half_width, n_scan + 1)[1:]
    ks = direction * q * k0
    vals = _kernels.spp_residual_scan(ks, k0, eps_s, eeff, e11, e12)

    def f(k):
        return float(_kernels.spp_residual_scan(np.array([k]), k0, eps_s, eeff, e11, e12)[0])

    out = []
    for i in range(ks.size - 1):
        va, vb = vals[i], vals[i + 1]
        if not (np.isfinite(va) and np.isfinite(vb)):
            continue
        if va == 0.0:
            root = ks[i]
        elif va * vb < 0.0:
            root = brentq(f, ks[i], ks[i + 1], xtol=1e-300, rtol=1e-12 * 0.5, maxiter=500)
        else:
            continue
        a_s = k0 * math.sqrt((root / k0) ** 2 - eps_s)
        a_p = k0 * math.sqrt((root / k0) ** 2 - eeff)
        if a_s <= _EDGE_TOL * k0 or a_p <= _EDGE_TOL * k0:
            continue
        if abs(f(root)) > 1e-10 * _root_scale(root, k0, eps_s, e11, e12, eeff):
            continue
        out.append(SppSolution(float(omega), float(root), a_s, a_p, float(eps_s),
                               p if isinstance(p, PlasmaParams) else p.local))
    return out


def solve_spp(omega: float, eps_s: float, p, direction: int = +1) -> SppSolution:
    """Surface mode travelling toward sign(direction)·x; the smallest |k| root if several."""
    roots = spp_roots(omega, eps_s, p, direction)
    if not roots:
        raise NoSolution(f"no surface mode toward {'+' if direction > 0 else '-'}x "
                         f"at omega={omega:.6e}")
    return min(roots, key=lambda s: abs(s.k_spp))


def pec_limit_spp(omega: float, p) -> SppSolution:
    """Closed form against a perfect conductor: k = ±k0√ε11, α_p = k0|ε12|/√ε11.

    The sign of k follows ε12, since only that choice keeps α_p > 0.
    """
    e11, e12, _ = p.components(omega)
    e11, e12 = float(e11), float(e12)
    if e11 <= 0.0:
        raise BelowPlasmaFrequency(f"epsilon_11 = {e11:.6g} <= 0: no PEC surface mode")
    k0 = omega / C0
    root = math.sqrt(e11)
    sign = 1.0 if e12 >= 0.0 else -1.0
    return SppSolution(float(omega), sign * k0 * root, math.inf, k0 * abs(e12) / root,
                       -math.inf, p if isinstance(p, PlasmaParams) else p.local)


def _solve_any(omega, eps_s, p, direction):
    if isinstance(eps_s, str) and eps_s.lower() == PEC:
        sol = pec_limit_spp(omega, p)
        if sol.alpha_p <= 0.0:
            raise NoSolution("unbiased plasma: PEC surface mode is delocalized")
        if direction is not None and np.sign(sol.k_spp) != direction:
            raise NoSolution("PEC surface mode runs the other way")
        return sol
    if direction is None:
        found = []
        for d in (1, -1):
            try:
                found.append(solve_spp(omega, eps_s, p, d))
            except NoSolution:
                pass
        if not found:
            raise NoSolution(f"no surface mode at omega={omega:.6e}")
        return min(found, key=lambda s: abs(s.k_spp))
    return solve_spp(omega, eps_s, p, direction)


def spp_band(omegas, eps_s, p, direction: int | None = None) -> list[SppBandPoint]:
    """Sample the surface-mode branch over ``omegas``; ``eps_s`` may be ``'pec'``.

    Frequencies without a root are skipped. Group velocity uses centred
    differences within each run of consecutive solved samples (one-sided at
    the ends of a run).
    """
    omegas = np.asarray(omegas, dtype=float)
    sols = []
    for om in omegas:
        try:
            sols.append(_solve_any(om, eps_s, p, direction))
        except (NoSolution, BelowPlasmaFrequency, DegenerateDenominator):
            sols.append(None)
    lo, hi = tm_gap(p)
    out = []
    n = len(sols)
    for i, s in enumerate(sols):
        if s is None:
            continue
        a = i - 1 if i > 0 and sols[i - 1] is not None else i
        b = i + 1 if i < n - 1 and sols[i + 1] is not None else i
        if a == b:
            vg = math.nan
        else:
            dk = sols[b].k_spp - sols[a].k_spp
            vg = (omegas[b] - omegas[a]) / dk if dk != 0.0 else math.inf
        out.append(SppBandPoint(float(s.omega), s.k_spp, s.alpha_s, s.alpha_p, vg,
                                bool(lo < s.omega < hi)))
    return out


def spp_field_profile(sol: SppSolution, y) -> FieldProfile:
    """E_x, E_y, H_z envelopes (H_z = 1 A/m at y = 0) for e^{−iωt}.

    Each half-space uses its own Maxwell curl relation, so E_x continuity at
    y = 0 holds only on a root of the dispersion equation.
    """
    y = np.asarray(y, dtype=float)
    w, k = sol.omega, sol.k_spp
    e11, e12, _ = sol.plasma.components(w)
    det = e11 * e11 - e12 * e12
    up = y >= 0.0
    hz = np.where(up, np.exp(-sol.alpha_s * np.where(up, y, 0.0)),
                  np.exp(sol.alpha_p * np.where(up, 0.0, y))).astype(complex)
    if math.isinf(sol.eps_s):
        ex_s = 0.0 * y
        ey_s = 0.0 * y
    else:
        ex_s = -1j * sol.alpha_s / (w * EPS0 * sol.eps_s) + 0.0 * y
        ey_s = k / (w * EPS0 * sol.eps_s) + 0.0 * y
    ex_p = 1j * (e11 * sol.alpha_p - e12 * k) / (det * w * EPS0) + 0.0 * y
    ey_p = (e11 * k - e12 * sol.alpha_p) / (det * w * EPS0) + 0.0 * y
    ex = np.where(up, ex_s, ex_p) * hz
    ey = np.where(up, ey_s, ey_p) * hz
    return FieldProfile(y=y, Ex=ex, Ey=ey, Hz=hz)


def confinement_map(omega_ratios, wc_ratios, omega_p: float) -> np.ndarray:
    """α_p·c/ω_p of the PEC surface mode on a (ω/ω_p, ω_c/ω_p) grid; NaN where none exists."""
    omega_ratios = np.asarray(omega_ratios, dtype=float)
    wc_ratios = np.asarray(wc_ratios, dtype=float)
    out = np.full((omega_ratios.size, wc_ratios.size), np.nan)
    for j, rc in enumerate(wc_ratios):
        p = PlasmaParams(omega_p, rc * omega_p)
        for i, r in enumerate(omega_ratios):
            try:
                out[i, j] = pec_limit_spp(r * omega_p, p).alpha_p * C0 / omega_p
            except (BelowPlasmaFrequency, ArithmeticError, ValueError):
                pass
    return out


def edge_channel_count(omega: float, eps_s, p) -> int:
    """Surface modes toward +x minus those toward −x at one frequency."""
    count = 0
    for d in (1, -1):
        if isinstance(eps_s, str):
            try:
                _solve_any(omega, eps_s, p, d)
                count += d
            except (NoSolution, BelowPlasmaFrequency):
                pass
        else:
            count += d * len(spp_roots(omega, eps_s, p, d))
    return count
