"""Six-vector Maxwell eigenproblem for local bianisotropic media.

Fields are packed as f = (E, H) ∈ C⁶. With e^{-iωt} and e^{ik·r} the
source-free equations read N(k) f = ω M f, where M holds the constitutive
blocks and N the curl operator. For a Hermitian positive-definite M the
symmetrized operator M^{-1/2} N M^{-1/2} is Hermitian, so the spectrum is real
and w = M^{1/2} f is an orthonormal eigenbasis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .constants import C0, EPS0, MU0
from .errors import EvaluationOutsideDomain, NotPositiveDefinite

__all__ = [
    "MaterialMatrix",
    "CurlMatrix",
    "EigenMode",
    "MaterialModel",
    "six_vector",
    "split_six",
    "cross_matrix",
    "assemble_material",
    "assemble_curl",
    "hermitian_sqrt",
    "hermitian_inv_sqrt",
    "solve_eigenmodes",
    "inner_product",
    "energy_weight",
    "T6",
]

T6 = np.diag([1.0, 1.0, 1.0, -1.0, -1.0, -1.0]).astype(complex)

_HERMITIAN_TOL = 1e-10
_DEGENERACY_TOL = 1e-9


def six_vector(e, h) -> np.ndarray:
    """Pack E (V/m) and H (A/m) into one complex 6-vector."""
    out = np.empty(6, dtype=complex)
    out[:3] = e
    out[3:] = h
    return out


def split_six(f) -> tuple[np.ndarray, np.ndarray]:
    f = np.asarray(f)
    return f[..., :3], f[..., 3:]


def cross_matrix(k) -> np.ndarray:
    """Matrix [k]× such that [k]× v = k × v."""
    kx, ky, kz = np.asarray(k, dtype=float)
    return np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])


def _as_k3(k) -> np.ndarray:
    k = np.asarray(k, dtype=float).ravel()
    if k.size == 2:
        k = np.array([k[0], k[1], 0.0])
    if k.size != 3 or not np.all(np.isfinite(k)):
        raise ValueError(f"k must be a finite 2- or 3-vector, got {k!r}")
    return k


@dataclass(frozen=True)
class MaterialMatrix:
    """A 6×6 constitutive matrix in SI units, optionally tagged with (ω, k)."""

    m: np.ndarray
    omega: float | None = None
    k: np.ndarray | None = None
    dispersive: bool = False
    nonlocal_: bool = False

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.shape != (6, 6):
            raise ValueError(f"material matrix must be 6x6, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)
        if self.k is not None:
            k = _as_k3(self.k)
            k.setflags(write=False)
            object.__setattr__(self, "k", k)

    @property
    def eps(self) -> np.ndarray:
        """Relative permittivity block."""
        return self.m[:3, :3] / EPS0

    @property
    def mu(self) -> np.ndarray:
        return self.m[3:, 3:] / MU0

    @property
    def xi(self) -> np.ndarray:
        return self.m[:3, 3:] * C0

    @property
    def zeta(self) -> np.ndarray:
        return self.m[3:, :3] * C0

    def hermitian_residual(self) -> float:
        return float(np.linalg.norm(self.m - self.m.conj().T) / np.linalg.norm(self.m))

    # Lets a fixed snapshot stand in wherever a model is expected.
    def matrix(self, omega=None, k=None) -> "MaterialMatrix":
        return self

    def weight(self, omega=None, k=None) -> np.ndarray:
        if self.dispersive:
            raise EvaluationOutsideDomain(
                "a frozen dispersive snapshot carries no frequency derivative")
        return np.array(self.m)


@dataclass(frozen=True)
class CurlMatrix:
    n: np.ndarray
    k: np.ndarray


@dataclass(frozen=True)
class EigenMode:
    omega: float
    k: np.ndarray
    band: int
    f: np.ndarray
    w: np.ndarray
    weight: np.ndarray
    multiplicity: int = 1


class MaterialModel(Protocol):
    """Anything that can produce M(ω, k); analytic ``weight`` is optional."""

    def matrix(self, omega: float, k) -> MaterialMatrix: ...


def assemble_material(eps, xi=None, sigma=None, mu=None, *, omega=None, k=None,
                      dispersive=False, nonlocal_=False) -> MaterialMatrix:
    """Build M = [[ε0 ε, ξ/c], [ς/c, μ0 μ]] from relative 3×3 blocks.

    Missing magneto-electric blocks default to zero and a missing μ to the
    identity.
    """
    eps = np.asarray(eps, dtype=complex)
    xi = np.zeros((3, 3), complex) if xi is None else np.asarray(xi, dtype=complex)
    sigma = np.zeros((3, 3), complex) if sigma is None else np.asarray(sigma, dtype=complex)
    mu = np.eye(3, dtype=complex) if mu is None else np.asarray(mu, dtype=complex)
    m = np.block([[EPS0 * eps, xi / C0], [sigma / C0, MU0 * mu]])
    return MaterialMatrix(m, omega=omega, k=k, dispersive=dispersive, nonlocal_=nonlocal_)


def assemble_curl(k) -> CurlMatrix:
    """Curl operator for e^{ik·r}: N f = (−k×H, k×E)."""
    k = _as_k3(k)
    kx = cross_matrix(k)
    z = np.zeros((3, 3))
    n = np.block([[z, -kx], [kx, z]]).astype(complex)
    return CurlMatrix(n=n, k=k)


def _check_hermitian(m: np.ndarray, tol: float) -> None:
    scale = np.linalg.norm(m)
    if scale == 0.0:
        raise NotPositiveDefinite("zero matrix")
    if np.linalg.norm(m - m.conj().T) > tol * scale:
        raise ValueError("matrix is not Hermitian")


def _eig_pd(m: np.ndarray):
    m = np.asarray(m, dtype=complex)
    _check_hermitian(m, _HERMITIAN_TOL)
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    if vals[0] <= 0.0:
        raise NotPositiveDefinite(f"smallest eigenvalue {vals[0]:.3e} is not positive")
    return vals, vecs


def hermitian_sqrt(m) -> np.ndarray:
    """Principal square root of a Hermitian positive-definite matrix."""
    vals, vecs = _eig_pd(m)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def hermitian_inv_sqrt(m) -> np.ndarray:
    vals, vecs = _eig_pd(m)
    return (vecs / np.sqrt(vals)) @ vecs.conj().T


def _multiplicities(omegas: np.ndarray, scale: float) -> list[int]:
    tol = _DEGENERACY_TOL * max(scale, 1e-300)
    return [int(np.sum(np.abs(omegas - w) <= tol)) for w in omegas]


def solve_eigenmodes(material: MaterialMatrix, k) -> list[EigenMode]:
    """All six modes of a dispersionless medium at wavevector k, sorted by ω.

    Band indices run 0..5 in ascending frequency. Degenerate eigenspaces come
    back as an arbitrary orthonormal basis with ``multiplicity`` > 1.
    """
    if material.dispersive:
        raise ValueError("solve_eigenmodes needs a dispersionless material")
    k = _as_k3(k)
    m_half_inv = hermitian_inv_sqrt(material.m)
    n = assemble_curl(k).n
    h = m_half_inv @ n @ m_half_inv
    h = 0.5 * (h + h.conj().T)
    omegas, vecs = np.linalg.eigh(h)
    scale = float(np.max(np.abs(omegas))) if omegas.size else 0.0
    mult = _multiplicities(omegas, scale)
    modes = []
    for i in range(6):
        w = vecs[:, i]
        modes.append(EigenMode(omega=float(omegas[i]), k=k, band=i, f=m_half_inv @ w,
                               w=w, weight=np.array(material.m), multiplicity=mult[i]))
    return modes


def inner_product(a, b, weight) -> complex:
    """⟨a|b⟩ = b† W a."""
    return complex(np.vdot(np.asarray(b), np.asarray(weight) @ np.asarray(a)))


def energy_weight(model, omega: float, k) -> np.ndarray:
    """Energy weight ∂ω(ω M(ω, k)) as a 6×6 Hermitian matrix.

    Uses ``model.weight`` when the model provides an analytic derivative and a
    central difference with relative step 1e-6 otherwise. Models may expose
    ``resonances(k)`` so that steps across a pole are refused.
    """
    k = _as_k3(k)
    analytic = getattr(model, "weight", None)
    if isinstance(model, MaterialMatrix):
        if not model.dispersive:
            return np.array(model.m)
        analytic = None
    if analytic is not None:
        w = np.asarray(analytic(omega, k), dtype=complex)
    else:
        h = abs(omega) * 1e-6
        for pole in getattr(model, "resonances", lambda _k: ())(k):
            if abs(abs(omega) - abs(pole)) <= 10.0 * h:
                raise EvaluationOutsideDomain(
                    f"omega={omega:.6e} lies within 10 steps of a pole at {pole:.6e}")
        mp = model.matrix(omega + h, k).m
        mm = model.matrix(omega - h, k).m
        w = ((omega + h) * mp - (omega - h) * mm) / (2.0 * h)
    w = 0.5 * (w + w.conj().T)
    return w
