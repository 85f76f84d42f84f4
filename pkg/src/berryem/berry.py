"""Berry connection, curvature, phase and Chern numbers.

Numerics work with weighted, normalized states w = W^{1/2} f / ‖W^{1/2} f‖,
where W = ∂ω(ωM) is the energy weight. The link between two neighbouring
states is U(a → b) = ⟨w_b|w_a⟩ = w_b† w_a, so that for a short step

    U ≈ exp(i A·dk),    A = i w†∇w,

and products of links around a closed path give its Berry phase. Everything
built from closed link products is gauge invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from . import _kernels
from .bulk import instantaneous_field, polar_state, tm_band_frequencies
from .constants import C0, EPS0, MU0
from .emcore import MaterialMatrix, solve_eigenmodes
from .errors import (BandNotFound, DegenerateDenominator, DegeneratePath,
                     DegeneratePoint, NonConvergent, NotPositiveDefinite,
                     PolarSingularity)
from .media import (ConstantMedium, Dielectric, NonlocalParams, PlasmaParams,
                    Vacuum, plasma_components, plasma_weight_components)

__all__ = [
    "KGrid",
    "KLoop",
    "BerryField",
    "ChernResult",
    "band_states",
    "connection_tm_analytic",
    "curvature_tm_analytic",
    "connection_numeric",
    "berry_phase_loop",
    "plaquette_curvature",
    "berry_field",
    "chern_number",
    "gap_chern_number",
    "cp_envelope",
    "cp_connection_curvature",
    "cp_chern_number",
    "spherical_path_phase",
    "cp_loop_integral",
    "q_similarity",
    "q_peak",
    "incremental_berry_phase",
    "wrap_phase",
]

_TWO_PI = 2.0 * math.pi


def wrap_phase(x):
    """Reduce to (−π, π]."""
    y = np.mod(np.asarray(x, dtype=float) + math.pi, _TWO_PI) - math.pi
    y = np.where(y == -math.pi, math.pi, y)
    return float(y) if np.ndim(y) == 0 else y


# ------------------------------------------------------------------ sampling


@dataclass(frozen=True)
class KGrid:
    """Cartesian in-plane grid of nodes (rad/m); states live on nodes."""

    kx: np.ndarray
    ky: np.ndarray

    @classmethod
    def square(cls, half_width: float, n: int, center=(0.0, 0.0)) -> "KGrid":
        if n < 2:
            raise ValueError("a grid needs at least 2 nodes per axis")
        return cls(center[0] + np.linspace(-half_width, half_width, n),
                   center[1] + np.linspace(-half_width, half_width, n))

    @property
    def shape(self):
        return (self.kx.size, self.ky.size)

    def mesh(self):
        return np.meshgrid(self.kx, self.ky, indexing="ij")

    def centers(self):
        cx = 0.5 * (self.kx[1:] + self.kx[:-1])
        cy = 0.5 * (self.ky[1:] + self.ky[:-1])
        return np.meshgrid(cx, cy, indexing="ij")


@dataclass(frozen=True)
class KLoop:
    """Ordered points of a closed path in k space; first and last coincide."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 3:
            raise DegeneratePath("a loop needs at least three points")
        if not np.array_equal(pts[0], pts[-1]):
            raise DegeneratePath("loop is not closed: first and last points differ")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def circle(cls, radius: float, n: int, center=(0.0, 0.0)) -> "KLoop":
        phi = np.linspace(0.0, _TWO_PI, n + 1)
        pts = np.stack([center[0] + radius * np.cos(phi), center[1] + radius * np.sin(phi)], -1)
        pts[-1] = pts[0]
        return cls(pts)


@dataclass(frozen=True)
class BerryField:
    """Connection and curvature sampled at the cell centres of a KGrid."""

    grid: KGrid
    kx: np.ndarray
    ky: np.ndarray
    A: np.ndarray
    F: np.ndarray
    gauge_tag: str


@dataclass(frozen=True)
class ChernResult:
    band: str
    value: float
    nearest_integer: int
    deviation: float
    grid: dict = field(default_factory=dict)


# ------------------------------------------------------------ band states


class _States:
    label = "band"
    dim = 2

    def states(self, kx, ky, kz=None):  # pragma: no cover - interface
        raise NotImplementedError

    def state(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.dim == 2:
            _, w = self.states(np.array([k[0]]), np.array([k[1]]))
        else:
            _, w = self.states(np.array([k[0]]), np.array([k[1]]), np.array([k[2]]))
        return w[0]


def _normalize(v: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.sum(np.abs(v) ** 2, axis=-1, keepdims=True))
    if np.any(~np.isfinite(norm)) or np.any(norm == 0.0):
        raise DegeneratePoint("state vanishes or is not finite on the requested points")
    return v / norm


class _TMStates(_States):
    """Transverse-magnetic plasma band, states in the adjugate gauge.

    The E part is adj(ε)(ẑ×k)/(ε0ω) and H = (ε11² − ε12²) ẑ, a real rescaling
    of the H_z = 1 envelope that stays finite at the band edges.
    """

    def __init__(self, model, band):
        self.model = model
        self.band = band
        self.label = f"TM-{band}"

    def radial(self, k_mag):
        m = self.model
        k_mag = np.asarray(k_mag, dtype=float)
        omega, y = tm_band_frequencies(m, k_mag, self.band)
        P = m.wp2(k_mag)
        e11, e12, _ = plasma_components(omega, P, m.omega_c, y)
        b11, b12, _ = plasma_weight_components(omega, P, m.omega_c, y)
        return omega, y, e11, e12, b11, b12

    def states(self, kx, ky, kz=None):
        kx = np.asarray(kx, dtype=float)
        ky = np.asarray(ky, dtype=float)
        k_mag = np.hypot(kx, ky)
        omega, _, e11, e12, b11, b12 = self.radial(k_mag)
        sa2, sb2 = b11 + b12, b11 - b12
        if np.any(sa2 <= 0.0) or np.any(sb2 <= 0.0):
            raise NotPositiveDefinite("energy weight is not positive definite on this band")
        sa, sb = np.sqrt(sa2), np.sqrt(sb2)
        al, be = 0.5 * (sa + sb), 0.5 * (sa - sb)
        # adj(ε)·(ẑ×k) with ẑ×k = (−ky, kx)
        ex = (e11 * (-ky) - 1j * e12 * kx) / (np.sqrt(EPS0) * omega)
        ey = (1j * e12 * (-ky) + e11 * kx) / (np.sqrt(EPS0) * omega)
        w = np.zeros(kx.shape + (6,), dtype=complex)
        w[..., 0] = al * ex + 1j * be * ey
        w[..., 1] = -1j * be * ex + al * ey
        w[..., 5] = np.sqrt(MU0) * (e11 * e11 - e12 * e12)
        return omega, _normalize(w)


class _TEStates(_States):
    def __init__(self, model):
        self.model = model
        self.label = "TE"

    def states(self, kx, ky, kz=None):
        m = self.model
        kx = np.asarray(kx, dtype=float)
        ky = np.asarray(ky, dtype=float)
        k_mag = np.hypot(kx, ky)
        P = m.wp2(k_mag)
        omega = np.sqrt(P + (k_mag * C0) ** 2)
        b33 = 1.0 + P / (omega * omega)
        w = np.zeros(kx.shape + (6,), dtype=complex)
        w[..., 2] = np.sqrt(EPS0 * b33)
        # H = (k × ẑ)/(μ0 ω) = (ky, −kx, 0)/(μ0 ω)
        w[..., 3] = ky / (np.sqrt(MU0) * omega)
        w[..., 4] = -kx / (np.sqrt(MU0) * omega)
        return omega, _normalize(w)


class _EigenStates(_States):
    """Band ``index`` of a dispersionless medium from the 6×6 Hermitian solve."""

    dim = 3

    def __init__(self, material: MaterialMatrix, index: int):
        self.material = material
        self.index = int(index)
        self.label = f"band-{self.index}"

    def states(self, kx, ky, kz=None):
        kx = np.asarray(kx, dtype=float)
        ky = np.asarray(ky, dtype=float)
        kz = np.zeros_like(kx) if kz is None else np.asarray(kz, dtype=float)
        shape = kx.shape
        omega = np.empty(shape)
        w = np.empty(shape + (6,), dtype=complex)
        for idx in np.ndindex(shape):
            modes = solve_eigenmodes(self.material, [kx[idx], ky[idx], kz[idx]])
            mode = modes[self.index]
            if mode.multiplicity > 1:
                raise DegeneratePoint(
                    f"band {self.index} is {mode.multiplicity}-fold degenerate at k={mode.k}")
            omega[idx] = mode.omega
            w[idx] = mode.w
        return omega, w


def band_states(model, band) -> _States:
    """State provider for (model, band).

    Plasma models accept ``'lower'``/``'upper'`` (TM) and ``'te'``;
    dispersionless media accept an integer index into the sorted spectrum.
    """
    if isinstance(model, _States):
        return model
    if isinstance(model, (PlasmaParams, NonlocalParams)):
        if isinstance(band, str) and band.lower() == "te":
            return _TEStates(model)
        if band in ("lower", "upper", 0, 1):
            return _TMStates(model, "upper" if band in ("upper", 1) else "lower")
        raise BandNotFound(f"plasma band must be 'lower', 'upper' or 'te', got {band!r}")
    if isinstance(model, (Vacuum, Dielectric, ConstantMedium)):
        model = model.matrix()
    if isinstance(model, MaterialMatrix):
        if not isinstance(band, (int, np.integer)) or not 0 <= band < 6:
            raise BandNotFound(f"band index must be an integer in 0..5, got {band!r}")
        return _EigenStates(model, band)
    raise TypeError(f"no band model for {type(model).__name__}")


# ------------------------------------------------------- analytic TM forms


def _tm_coefficients(p, k, omega, detuning=None):
    e11, e12, _ = p.components(omega, k, detuning)
    b11r, b12r, _ = p.weight_components(omega, k, detuning)
    det = e11 * e11 - e12 * e12
    if det == 0.0:
        raise DegenerateDenominator("epsilon_11^2 = epsilon_12^2")
    a11 = e11 / det
    a12 = -1j * e12 / det
    b11 = EPS0 * b11r
    b12 = EPS0 * 1j * b12r
    return a11, a12, b11, b12


def _tm_denominator(a11, a12, b11, b12, kx, ky, omega):
    pre = 1.0 / (EPS0 * omega) ** 2
    s = abs(a11) ** 2 + abs(a12) ** 2
    d = (kx * kx + ky * ky) * pre * (s * b11 - 2.0 * a11 * a12 * b12) + MU0
    d = float(np.real(d))
    if d == 0.0:
        raise DegenerateDenominator("connection denominator D vanishes")
    return d


def connection_tm_analytic(p, k, omega: float, detuning: float | None = None) -> np.ndarray:
    """Closed-form TM connection Re{N}/D (rad/m)⁻¹ at an on-shell (k, ω)."""
    kx, ky = float(k[0]), float(k[1])
    a11, a12, b11, b12 = _tm_coefficients(p, [kx, ky], omega, detuning)
    pre = 1j / (EPS0 * omega) ** 2
    s = abs(a11) ** 2 + abs(a12) ** 2
    nx = pre * (-2.0 * a11 * a12 * (kx * b12 + ky * b11) + s * (kx * b11 - ky * b12))
    ny = pre * (2.0 * a11 * a12 * (kx * b11 - ky * b12) + s * (kx * b12 + ky * b11))
    d = _tm_denominator(a11, a12, b11, b12, kx, ky, omega)
    return np.array([np.real(nx), np.real(ny)]) / d


def curvature_tm_analytic(p, k, omega: float, detuning: float | None = None) -> float:
    """Closed-form TM curvature F_z (m²) at an on-shell (k, ω).

    Note: this expression holds the band frequency fixed; it is not the curl
    of ``connection_tm_analytic`` along the dispersion surface.
    """
    kx, ky = float(k[0]), float(k[1])
    a11, a12, b11, b12 = _tm_coefficients(p, [kx, ky], omega, detuning)
    s = abs(a11) ** 2 + abs(a12) ** 2
    d = _tm_denominator(a11, a12, b11, b12, kx, ky, omega)
    val = np.real(1j * (4.0 * a11 * a12 * b11 + 2.0 * s * b12))
    return float(val / (d * (EPS0 * omega) ** 2))


# ------------------------------------------------------ discrete numerics


def _k_scale(model) -> float:
    if isinstance(model, (PlasmaParams, NonlocalParams)):
        return max(model.omega_p, abs(model.omega_c)) / C0
    return 1.0


def connection_numeric(model, band, k, delta: float | None = None,
                       gauge=None) -> np.ndarray:
    """Forward-link connection A_i = arg⟨w(k+δê_i)|w(k)⟩/δ; first order in δ.

    ``gauge``, if given, maps k to a phase ξ(k) and every state is replaced
    by e^{iξ(k)} w(k) first, which shifts the result by −∇ξ.
    """
    bs = band_states(model, band)
    k = np.asarray(k, dtype=float)
    kn = float(np.linalg.norm(k))
    if delta is None:
        delta = 1e-6 * (kn if kn > 0 else _k_scale(model))
    if not delta > 0.0:
        raise ValueError("delta must be positive")
    def state(q):
        w = bs.state(q)
        return w if gauge is None else w * np.exp(1j * float(gauge(q)))

    w0 = state(k)
    out = np.empty(k.size)
    for i in range(k.size):
        kp = k.copy()
        kp[i] += delta
        u = np.vdot(state(kp), w0)
        if abs(u) < 1e-8:
            raise DegeneratePoint(f"neighbouring states are orthogonal at k={k}")
        out[i] = np.angle(u) / delta
    return out


def _loop_states(bs, pts):
    if bs.dim == 3 and pts.shape[1] == 3:
        return bs.states(pts[:, 0], pts[:, 1], pts[:, 2])[1]
    return bs.states(pts[:, 0], pts[:, 1])[1]


def berry_phase_loop(model, band, loop: KLoop, reduce: bool = True,
                     phases: np.ndarray | None = None) -> float:
    """Σ arg⟨w_{j+1}|w_j⟩ around a closed loop.

    ``reduce`` folds the result into (−π, π]. ``phases`` multiplies each
    sample by e^{iχ_j} (a gauge change) before the sum.
    """
    bs = band_states(model, band)
    w = _loop_states(bs, loop.points[:-1])
    if phases is not None:
        w = w * np.exp(1j * np.asarray(phases))[:, None]
    w_next = np.roll(w, -1, axis=0)
    if np.any(np.abs(np.sum(np.conj(w_next) * w, axis=-1)) < 1e-8):
        raise DegeneratePoint("loop crosses a point where neighbouring states are orthogonal")
    total = math.fsum(_kernels.link_phases(w, w_next))
    return wrap_phase(total) if reduce else total


def _grid_states(bs, grid: KGrid, phases=None):
    kx, ky = grid.mesh()
    _, w = bs.states(kx, ky)
    if phases is not None:
        w = w * np.exp(1j * np.asarray(phases))[..., None]
    return w


def plaquette_curvature(model, band, grid: KGrid, phases: np.ndarray | None = None) -> np.ndarray:
    """F_z on the cells of ``grid``: loop phase of each cell over its area."""
    bs = band_states(model, band)
    w = _grid_states(bs, grid, phases)
    area = np.outer(np.diff(grid.kx), np.diff(grid.ky))
    return _kernels.plaquette_phases(w) / area


def berry_field(model, band, grid: KGrid) -> BerryField:
    """A and F_z at cell centres.

    F comes from plaquettes. A comes from the closed form for the local TM
    plasma and from centred links otherwise; both are in the gauge of the
    H_z-real (TM) or E_z-real (TE) envelopes, which the tag records.
    """
    bs = band_states(model, band)
    F = plaquette_curvature(bs, band, grid)
    cx, cy = grid.centers()
    A = np.zeros(cx.shape + (2,))
    if isinstance(bs, _TMStates) and isinstance(model, PlasmaParams):
        om, y = tm_band_frequencies(model, np.hypot(cx, cy), bs.band)
        for idx in np.ndindex(cx.shape):
            A[idx] = connection_tm_analytic(model, (cx[idx], cy[idx]), om[idx], y[idx])
        tag = "TM H_z real; analytic connection"
    else:
        hx = 0.5 * np.min(np.diff(grid.kx)) * 1e-3
        for i, e in enumerate(((hx, 0.0), (0.0, hx))):
            _, wp = bs.states(cx + e[0], cy + e[1])
            _, wm = bs.states(cx - e[0], cy - e[1])
            A[..., i] = np.angle(np.sum(np.conj(wp) * wm, axis=-1)) / (2.0 * hx)
        tag = f"{bs.label}; centred-link connection"
    return BerryField(grid=grid, kx=cx, ky=cy, A=A, F=F, gauge_tag=tag)


def _ring_states(bs, radii, n_angular):
    phi = _TWO_PI * np.arange(n_angular) / n_angular
    rr, pp = np.meshgrid(radii, phi, indexing="ij")
    _, w = bs.states(rr * np.cos(pp), rr * np.sin(pp))
    # close the angular direction with an exact copy of the first column
    return np.concatenate([w, w[:, :1, :]], axis=1)


def _default_outer(model) -> float:
    if isinstance(model, NonlocalParams):
        return 50.0 * model.k_max
    return 1e3 * _k_scale(model)


def chern_number(model, band, n_radial: int = 256, n_angular: int = 256,
                 k_outer: float | None = None, far_factor: float = 1e3,
                 strict: bool = True) -> ChernResult:
    """Chern number of a rotation-invariant in-plane band on a compactified polar grid.

    Rings sit at k = K·tan(u) with u uniform in (0, u_outer]. The flux splits
    into the disk inside the first ring (its wrapped loop phase), the
    plaquettes between rings, and the annulus from the outer ring to
    ``far_factor``·k_outer, which closes the grid toward k → ∞.
    """
    if n_radial < 2 or n_angular < 3:
        raise ValueError("grid too coarse")
    bs = band_states(model, band)
    scale = _k_scale(model)
    k_out = _default_outer(model) if k_outer is None else float(k_outer)
    u_out = math.atan(k_out / scale)
    u = u_out * np.arange(1, n_radial + 1) / n_radial
    radii = scale * np.tan(u)
    radii[-1] = k_out
    w = _ring_states(bs, radii, n_angular)
    inner = wrap_phase(math.fsum(_kernels.link_phases(w[0, :-1], w[0, 1:])))
    bulk = _kernels.plaquette_phases(w)
    w_far = _ring_states(bs, np.array([k_out * far_factor]), n_angular)
    tail = _kernels.plaquette_phases(np.concatenate([w[-1:], w_far], axis=0))
    total = math.fsum([inner, *bulk.ravel().tolist(), *tail.ravel().tolist()])
    value = total / _TWO_PI
    nearest = int(round(value))
    res = ChernResult(band=bs.label, value=value, nearest_integer=nearest,
                      deviation=abs(value - nearest),
                      grid={"n_radial": n_radial, "n_angular": n_angular, "k_scale": scale,
                            "k_outer": k_out, "k_far": k_out * far_factor})
    if strict and res.deviation > 0.05:
        raise NonConvergent(f"Chern integral {value:.6f} is not close to an integer", res)
    return res


def gap_chern_number(model, **kw) -> int:
    """Gap Chern number of the TM gap: minus the Chern number of the band above.

    The Chern numbers of all bands add up to zero, so the bands below the gap
    (including the unresolved one near ω = 0) carry −C_upper in total.
    """
    return -chern_number(model, "upper", **kw).nearest_integer


# ------------------------------------------------------ circular states


def _sph_basis(khat):
    khat = np.asarray(khat, dtype=float)
    khat = khat / np.linalg.norm(khat)
    theta = math.acos(max(-1.0, min(1.0, khat[2])))
    phi = math.atan2(khat[1], khat[0])
    st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
    return theta, np.array([ct * cp, ct * sp, -st]), np.array([-sp, cp, 0.0])


def cp_envelope(khat, helicity: int) -> np.ndarray:
    """Vacuum circular plane wave (e±, ∓(i/η0) e±)/√(2ε0), e± = (θ̂ ± iφ̂)/√2."""
    h = _helicity(helicity)
    _, th, ph = _sph_basis(khat)
    e = (th + h * 1j * ph) / math.sqrt(2.0)
    eta0 = math.sqrt(MU0 / EPS0)
    return np.concatenate([e, -h * 1j * e / eta0]) / math.sqrt(2.0 * EPS0)


def _helicity(h) -> int:
    if h in (1, "+", "+1"):
        return 1
    if h in (-1, "-", "-1", "−"):
        return -1
    raise ValueError(f"helicity must be +1 or -1, got {h!r}")


def cp_connection_curvature(khat, k_mag: float, helicity: int):
    """Closed forms in the spherical basis: A = (0, 0, ±cosθ/(k sinθ)), F = (∓1/k², 0, 0)."""
    h = _helicity(helicity)
    theta, _, _ = _sph_basis(khat)
    F = np.array([-h / k_mag ** 2, 0.0, 0.0])
    st = math.sin(theta)
    if st < 1e-12:
        raise PolarSingularity("the connection is singular on the polar axis")
    A = np.array([0.0, 0.0, h * math.cos(theta) / (k_mag * st)])
    return A, F


def cp_chern_number(helicity: int, n_theta: int = 64, n_phi: int = 64) -> float:
    """Flux of the CP curvature through a sphere via plaquettes, over 2π."""
    h = _helicity(helicity)
    theta = np.linspace(0.0, math.pi, n_theta + 1)
    phi = np.linspace(0.0, _TWO_PI, n_phi + 1)
    w = np.empty((theta.size, phi.size, 6), dtype=complex)
    for i, t in enumerate(theta):
        for j, p in enumerate(phi[:-1]):
            khat = [math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)]
            f = cp_envelope(khat, h)
            wf = np.concatenate([math.sqrt(EPS0) * f[:3], math.sqrt(MU0) * f[3:]])
            w[i, j] = wf / np.linalg.norm(wf)
        w[i, -1] = w[i, 0]
    return math.fsum(_kernels.plaquette_phases(w).ravel().tolist()) / _TWO_PI


def _unit_path(path):
    pts = np.array(path, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DegeneratePath("path must be a list of 3-vectors")
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms == 0.0):
        raise DegeneratePath("zero vector on path")
    pts = pts / norms[:, None]
    if not np.allclose(pts[0], pts[-1], rtol=0, atol=1e-15):
        pts = np.vstack([pts, pts[:1]])
    verts = pts[:-1]
    nxt = np.roll(verts, -1, axis=0)
    if len(verts) < 2:
        raise DegeneratePath("path needs at least two distinct vertices")
    dots = np.einsum("ij,ij->i", verts, nxt)
    if np.any(dots >= 1.0 - 1e-15) or np.any(dots <= -1.0 + 1e-15):
        raise DegeneratePath("consecutive vertices coincide or are antipodal")
    return verts


def _tangent_towards(b, a):
    t = a - np.dot(a, b) * b
    return t / np.linalg.norm(t)


def solid_angle_left(path) -> float:
    """Solid angle on the left of a closed geodesic polygon (Gauss–Bonnet)."""
    verts = _unit_path(path)
    n = len(verts)
    turning = []
    for i in range(n):
        a, b, c = verts[i - 1], verts[i], verts[(i + 1) % n]
        t_in = -_tangent_towards(b, a)
        t_out = _tangent_towards(b, c)
        turning.append(math.atan2(float(np.dot(np.cross(t_in, t_out), b)),
                                  float(np.dot(t_in, t_out))))
    return _TWO_PI - math.fsum(turning)


def spherical_path_phase(path, helicity: int) -> float:
    """Parallel-transport phase ∓Ω of a CP state carried around a geodesic polygon.

    Ω is the solid angle to the left of the path; the value is not reduced
    modulo 2π. A there-and-back path encloses nothing and returns 0.
    """
    h = _helicity(helicity)
    verts = _unit_path(path)
    if len(verts) == 2:
        return 0.0
    return -h * solid_angle_left(path)


def cp_loop_integral(path, helicity: int) -> float:
    """∮A·dk along the geodesic arcs, with A in the gauge regular at the north pole.

    In that gauge A·dk = ±(cosθ − 1) dφ, which on the unit sphere reads
    ∓(x dy − y dx)/(1 + z). Loops through the south pole are refused.
    """
    h = _helicity(helicity)
    verts = _unit_path(path)
    total = []
    for i in range(len(verts)):
        a, b = verts[i], verts[(i + 1) % len(verts)]
        ang = math.acos(max(-1.0, min(1.0, float(np.dot(a, b)))))
        u = b - np.dot(a, b) * a
        u /= np.linalg.norm(u)

        def integrand(s, a=a, u=u):
            p = a * math.cos(s) + u * math.sin(s)
            dp = -a * math.sin(s) + u * math.cos(s)
            if 1.0 + p[2] < 1e-12:
                raise PolarSingularity("path crosses the south pole")
            return -(p[0] * dp[1] - p[1] * dp[0]) / (1.0 + p[2])

        val, _ = quad(integrand, 0.0, ang, epsabs=1e-14, epsrel=1e-13, limit=200)
        total.append(val)
    return h * math.fsum(total)


# ------------------------------------------------------------ Q(t)


def _cartesian(e_polar, phi):
    e_r, e_phi, e_z = e_polar
    rhat = np.array([math.cos(phi), math.sin(phi), 0.0])
    phat = np.array([-math.sin(phi), math.cos(phi), 0.0])
    return e_r * rhat + e_phi * phat + e_z * np.array([0.0, 0.0, 1.0])


def q_similarity(p: PlasmaParams, omega: float, delta_phi: float, t: float, r: float) -> float:
    """Cosine similarity of the real fields of the k̂(0) mode at t = 0 and the k̂(δφ) mode at t.

    Each field is taken a distance r along its own propagation direction.
    """
    state = polar_state(p, omega)
    e0 = _cartesian(instantaneous_field(state, 0.0, r), 0.0)
    e1 = _cartesian(instantaneous_field(state, t, r), delta_phi)
    return float(np.dot(e0, e1) / (np.linalg.norm(e0) * np.linalg.norm(e1)))


def q_peak(p: PlasmaParams, omega: float, delta_phi: float, r: float = 0.0,
           window: tuple[float, float] = (-0.2, 0.2), n_scan: int = 4001,
           tol: float = 1e-5) -> float:
    """ωt in ``window`` that maximizes Q: dense scan, then golden-section refinement."""
    wts = np.linspace(window[0], window[1], n_scan)
    q = np.array([q_similarity(p, omega, delta_phi, wt / omega, r) for wt in wts])
    i = int(np.argmax(q))
    i = min(max(i, 1), n_scan - 2)
    res = minimize_scalar(lambda wt: -q_similarity(p, omega, delta_phi, wt / omega, r),
                          bracket=(wts[i - 1], wts[i], wts[i + 1]), method="golden",
                          tol=tol)
    return float(res.x)


def incremental_berry_phase(p: PlasmaParams, omega: float, delta_phi: float) -> float:
    """δγ = A_φ k δφ from the closed-form connection, for the TM mode at ω."""
    state = polar_state(p, omega)
    a = connection_tm_analytic(p, (state.k, 0.0), omega)
    return float(a[1] * state.k * delta_phi)
