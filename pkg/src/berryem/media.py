"""Material models and the time-reversal / inversion / reciprocity machinery.

The gyrotropic plasma (bias along z) has relative permittivity

    ε = [[ε11, iε12, 0], [−iε12, ε11, 0], [0, 0, ε33]]
    ε11 = 1 − ωp²/(ω² − ωc²),  ε12 = −ωc ωp²/(ω(ω² − ωc²)),  ε33 = 1 − ωp²/ω².

The nonlocal variant damps the response toward its ω → ∞ limit above a
cutoff wavenumber, M = M∞ + s(k)(M(ω) − M∞) with s = 1/(1 + k²/k_max²). For
this model that is the same as replacing ωp² by s(k)·ωp².
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .constants import C0, EPS0, MU0, cyclotron_from_bias, rad_to_thz, thz_to_rad
from .emcore import T6, MaterialMatrix, _as_k3, assemble_material
from .errors import DomainError, ResonanceSingularity

__all__ = [
    "PlasmaParams",
    "NonlocalParams",
    "Vacuum",
    "Dielectric",
    "ConstantMedium",
    "SymmetryReport",
    "plasma_components",
    "plasma_permittivity",
    "regularize_nonlocal",
    "m_infinity",
    "time_reverse_material",
    "invert_material",
    "TimeReversed",
    "Inverted",
    "classify_symmetry",
    "RANDOM_FAMILIES",
    "random_material",
    "material_from_json",
    "material_to_json",
]

_RESONANCE_GUARD = 1e-9
_SYMMETRY_TOL = 1e-10


def plasma_components(omega, wp2, wc, detuning=None):
    """(ε11, ε12, ε33) for the effective ωp² ``wp2``.

    ``detuning`` may carry a precomputed ω² − ωc²; passing it avoids the
    cancellation that ω·ω − ωc·ωc suffers right next to the cyclotron pole.
    """
    omega = np.asarray(omega, dtype=float)
    d = omega * omega - wc * wc if detuning is None else np.asarray(detuning, dtype=float)
    e11 = 1.0 - wp2 / d
    e12 = -wc * wp2 / (omega * d)
    e33 = 1.0 - wp2 / (omega * omega)
    return e11, e12, e33


def _tensor(e11, e12, e33) -> np.ndarray:
    return np.array([[e11, 1j * e12, 0.0], [-1j * e12, e11, 0.0], [0.0, 0.0, e33]],
                    dtype=complex)


def m_infinity() -> np.ndarray:
    """High-frequency limit diag(ε0 I, μ0 I) of every plasma model here."""
    return np.diag([EPS0] * 3 + [MU0] * 3).astype(complex)


class _PlasmaBase:
    """Shared evaluation code for the local and the cutoff plasma."""

    omega_p: float
    omega_c: float

    def wp2(self, k_mag) -> Any:  # pragma: no cover - overridden
        raise NotImplementedError

    @property
    def nonlocal_(self) -> bool:
        return False

    def _check_omega(self, omega: float) -> None:
        if not np.isfinite(omega) or omega <= 0.0:
            raise ResonanceSingularity(f"omega must be positive and finite, got {omega!r}")
        wc = abs(self.omega_c)
        if wc > 0.0 and abs(omega - wc) <= _RESONANCE_GUARD * omega:
            raise ResonanceSingularity(
                f"omega={omega:.9e} rad/s sits on the cyclotron resonance |omega_c|")

    def resonances(self, k=None) -> tuple[float, ...]:
        return (0.0, abs(self.omega_c))

    def components(self, omega: float, k=None, detuning=None):
        self._check_omega(omega)
        kk = 0.0 if k is None else float(np.linalg.norm(_as_k3(k)))
        return plasma_components(omega, self.wp2(kk), self.omega_c, detuning)

    def permittivity(self, omega: float, k=None) -> np.ndarray:
        return _tensor(*self.components(omega, k))

    def matrix(self, omega: float, k=None) -> MaterialMatrix:
        eps = self.permittivity(omega, k)
        return assemble_material(eps, omega=omega, k=None if k is None else _as_k3(k),
                                 dispersive=True, nonlocal_=self.nonlocal_)

    def weight_components(self, omega: float, k=None, detuning=None):
        """Relative blocks (β11, β12, β33) of ∂ω(ω ε): W_E = ε0[[β11, iβ12, 0], [−iβ12, β11, 0], [0, 0, β33]]."""
        self._check_omega(omega)
        kk = 0.0 if k is None else float(np.linalg.norm(_as_k3(k)))
        return plasma_weight_components(omega, self.wp2(kk), self.omega_c, detuning)

    def weight(self, omega: float, k=None) -> np.ndarray:
        b11, b12, b33 = self.weight_components(omega, k)
        w = np.zeros((6, 6), dtype=complex)
        w[:3, :3] = EPS0 * _tensor(b11, b12, b33)
        w[3:, 3:] = MU0 * np.eye(3)
        return w


def plasma_weight_components(omega, wp2, wc, detuning=None):
    omega = np.asarray(omega, dtype=float)
    d = omega * omega - wc * wc if detuning is None else np.asarray(detuning, dtype=float)
    b11 = 1.0 - wp2 * (d - 2.0 * omega * omega) / (d * d)
    b12 = 2.0 * wc * wp2 * omega / (d * d)
    b33 = 1.0 + wp2 / (omega * omega)
    return b11, b12, b33


@dataclass(frozen=True)
class PlasmaParams(_PlasmaBase):
    """Local magnetized plasma. ``omega_c`` is signed; its sign is the bias direction."""

    omega_p: float
    omega_c: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.omega_p) and self.omega_p > 0.0):
            raise DomainError(f"omega_p must be positive, got {self.omega_p!r}")
        if not np.isfinite(self.omega_c):
            raise DomainError(f"omega_c must be finite, got {self.omega_c!r}")

    @classmethod
    def from_thz(cls, fp_thz: float, fc_thz: float = 0.0) -> "PlasmaParams":
        return cls(thz_to_rad(fp_thz), thz_to_rad(fc_thz))

    @classmethod
    def from_bias(cls, omega_p: float, b_tesla: float) -> "PlasmaParams":
        return cls(omega_p, cyclotron_from_bias(b_tesla))

    @property
    def local(self) -> "PlasmaParams":
        return self

    def wp2(self, k_mag=0.0):
        return self.omega_p ** 2 + 0.0 * np.asarray(k_mag, dtype=float)

    def with_omega_c(self, omega_c: float) -> "PlasmaParams":
        return PlasmaParams(self.omega_p, omega_c)


@dataclass(frozen=True)
class NonlocalParams(_PlasmaBase):
    """Plasma with the high-wavenumber cutoff s(k) = 1/(1 + k²/k_max²)."""

    base: PlasmaParams
    k_max: float

    def __post_init__(self):
        if not (np.isfinite(self.k_max) and self.k_max > 0.0):
            raise DomainError(f"k_max must be positive, got {self.k_max!r}")

    @classmethod
    def from_ratio(cls, base: PlasmaParams, ratio: float = 100.0) -> "NonlocalParams":
        """k_max = ratio·|ωc|/c."""
        return cls(base, ratio * abs(base.omega_c) / C0)

    @property
    def omega_p(self) -> float:
        return self.base.omega_p

    @property
    def omega_c(self) -> float:
        return self.base.omega_c

    @property
    def local(self) -> PlasmaParams:
        return self.base

    @property
    def nonlocal_(self) -> bool:
        return True

    def cutoff(self, k_mag):
        k_mag = np.asarray(k_mag, dtype=float)
        return 1.0 / (1.0 + (k_mag / self.k_max) ** 2)

    def wp2(self, k_mag=0.0):
        return self.omega_p ** 2 * self.cutoff(k_mag)


def plasma_permittivity(p, omega: float, k=None) -> np.ndarray:
    """Relative permittivity tensor of a (local or cutoff) plasma at ω (and k)."""
    return p.permittivity(omega, k)


def regularize_nonlocal(np_: NonlocalParams, omega: float, k) -> MaterialMatrix:
    """M∞ + s(k)(M(ω) − M∞), evaluated literally from the local matrix."""
    k = _as_k3(k)
    m_loc = np_.base.matrix(omega).m
    m_inf = m_infinity()
    s = float(np_.cutoff(np.linalg.norm(k)))
    m = m_loc if s == 1.0 else m_inf + s * (m_loc - m_inf)
    return MaterialMatrix(m, omega=omega, k=k,
                          dispersive=True, nonlocal_=True)


@dataclass(frozen=True)
class Vacuum:
    def matrix(self, omega=None, k=None) -> MaterialMatrix:
        return assemble_material(np.eye(3))

    def weight(self, omega=None, k=None) -> np.ndarray:
        return np.array(self.matrix().m)

    def resonances(self, k=None):
        return ()


@dataclass(frozen=True)
class Dielectric:
    eps_s: float

    def __post_init__(self):
        if not np.isfinite(self.eps_s):
            raise DomainError("eps_s must be finite")

    def matrix(self, omega=None, k=None) -> MaterialMatrix:
        return assemble_material(self.eps_s * np.eye(3))

    def weight(self, omega=None, k=None) -> np.ndarray:
        return np.array(self.matrix().m)

    def resonances(self, k=None):
        return ()


@dataclass(frozen=True)
class ConstantMedium:
    """Dispersionless, local medium given by its full 6×6 matrix."""

    material: MaterialMatrix

    def matrix(self, omega=None, k=None) -> MaterialMatrix:
        return self.material

    def weight(self, omega=None, k=None) -> np.ndarray:
        return np.array(self.material.m)

    def resonances(self, k=None):
        return ()


# ------------------------------------------------------------ symmetry ops


def _neg_k(k):
    return None if k is None else -np.asarray(k)


def time_reverse_material(m: MaterialMatrix) -> MaterialMatrix:
    """T6 M* T6. A snapshot taken at k describes the reversed medium at −k."""
    return MaterialMatrix(T6 @ np.conj(m.m) @ T6, omega=m.omega, k=_neg_k(m.k),
                          dispersive=m.dispersive, nonlocal_=m.nonlocal_)


def invert_material(m: MaterialMatrix) -> MaterialMatrix:
    """T6 M T6 with k reversed: ε and μ kept, ξ and ς negated."""
    return MaterialMatrix(T6 @ m.m @ T6, omega=m.omega, k=_neg_k(m.k),
                          dispersive=m.dispersive, nonlocal_=m.nonlocal_)


@dataclass(frozen=True)
class TimeReversed:
    """Model whose M(ω, k) is T6 M*(ω, −k) T6 of the wrapped model."""

    model: Any

    def matrix(self, omega, k=None) -> MaterialMatrix:
        kk = np.zeros(3) if k is None else _as_k3(k)
        src = self.model.matrix(omega, -kk)
        out = time_reverse_material(src)
        return MaterialMatrix(out.m, omega=omega, k=kk, dispersive=src.dispersive,
                              nonlocal_=src.nonlocal_)


@dataclass(frozen=True)
class Inverted:
    model: Any

    def matrix(self, omega, k=None) -> MaterialMatrix:
        kk = np.zeros(3) if k is None else _as_k3(k)
        src = self.model.matrix(omega, -kk)
        out = invert_material(src)
        return MaterialMatrix(out.m, omega=omega, k=kk, dispersive=src.dispersive,
                              nonlocal_=src.nonlocal_)


@dataclass(frozen=True)
class SymmetryReport:
    lossless: bool
    tr_invariant: bool
    inversion_invariant: bool
    reciprocal: bool
    residuals: dict = field(default_factory=dict)

    @property
    def theorem_holds(self) -> bool:
        """lossless ⇒ (reciprocal ⇔ TR-invariant)."""
        return (not self.lossless) or (self.reciprocal == self.tr_invariant)


_SCALE = np.diag([EPS0 ** -0.5] * 3 + [MU0 ** -0.5] * 3)
_SCALE_INV = np.diag([EPS0 ** 0.5] * 3 + [MU0 ** 0.5] * 3)


def _dimensionless(m: np.ndarray) -> np.ndarray:
    # D M D with D = diag(ε0^{-1/2}, μ0^{-1/2}); commutes with T6, so every
    # symmetry test is unchanged while ε-block and μ-block errors weigh equally.
    return _SCALE @ m @ _SCALE


def classify_symmetry(model, omega: float | None = None,
                      ks: Iterable | None = None, tol: float = _SYMMETRY_TOL) -> SymmetryReport:
    """Test losslessness, time reversal, inversion and reciprocity on samples.

    ``model`` is any object with ``matrix(ω, k)``; a bare ``MaterialMatrix``
    is treated as a local medium. Flags use the worst relative residual over
    the sampled wavevectors.
    """
    if ks is None:
        ks = [np.zeros(3)]
    res = {"lossless": 0.0, "tr_invariant": 0.0, "inversion_invariant": 0.0, "reciprocal": 0.0}
    for k in ks:
        k = _as_k3(k)
        mp = _dimensionless(model.matrix(omega, k).m)
        mm = _dimensionless(model.matrix(omega, -k).m)
        scale = np.linalg.norm(mp)
        checks = {
            "lossless": mp - mp.conj().T,
            "tr_invariant": mp - T6 @ np.conj(mm) @ T6,
            "inversion_invariant": mp - T6 @ mm @ T6,
            "reciprocal": mp - T6 @ mm.T @ T6,
        }
        for name, diff in checks.items():
            res[name] = max(res[name], float(np.linalg.norm(diff) / scale))
    flags = {name: value <= tol for name, value in res.items()}
    return SymmetryReport(residuals=res, **flags)


RANDOM_FAMILIES = ("reciprocal", "gyrotropic", "tellegen", "lossy")


def _spd(rng, n=3):
    a = rng.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


def random_material(rng: np.random.Generator, family: str) -> MaterialMatrix:
    """Random local constitutive matrix (relative units) from a named family.

    ``reciprocal``: lossless chiral medium, ξ = iK and ς = −iKᵀ.
    ``gyrotropic``: lossless, ε with an imaginary antisymmetric part.
    ``tellegen``: lossless, ξ = ς = K real symmetric.
    ``lossy``: any of the above plus a non-Hermitian perturbation.
    """
    eps = _spd(rng).astype(complex)
    mu = _spd(rng).astype(complex)
    K = 0.3 * rng.standard_normal((3, 3))
    if family == "reciprocal":
        xi, zeta = 1j * K, -1j * K.T
    elif family == "gyrotropic":
        g = rng.standard_normal(3)
        eps = eps + 1j * np.array([[0, g[2], -g[1]], [-g[2], 0, g[0]], [g[1], -g[0], 0]])
        xi = zeta = np.zeros((3, 3))
    elif family == "tellegen":
        xi = zeta = 0.5 * (K + K.T)
    elif family == "lossy":
        base = random_material(rng, RANDOM_FAMILIES[int(rng.integers(3))]).m
        loss = 0.1 * (rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
        return MaterialMatrix(base + _SCALE_INV @ loss @ _SCALE_INV)
    else:
        raise ValueError(f"unknown family {family!r}; expected one of {RANDOM_FAMILIES}")
    return assemble_material(eps, xi, zeta, mu)


# ------------------------------------------------------------ JSON descriptors

_MATERIAL_KEYS = {
    "vacuum": {"type"},
    "dielectric": {"type", "eps_s"},
    "plasma": {"type", "omega_p_thz", "omega_c_thz", "b_tesla"},
    "nonlocal_plasma": {"type", "omega_p_thz", "omega_c_thz", "b_tesla", "k_max_over_c"},
}


def _material_errors(d: Any, where: str = "material") -> list[str]:
    if not isinstance(d, dict):
        return [f"{where}: expected an object"]
    kind = d.get("type")
    if kind not in _MATERIAL_KEYS:
        return [f"{where}.type: expected one of {sorted(_MATERIAL_KEYS)}, got {kind!r}"]
    errs = [f"{where}.{key}: unknown field" for key in sorted(set(d) - _MATERIAL_KEYS[kind])]

    def num(key, positive=False, required=True):
        if key not in d:
            if required:
                errs.append(f"{where}.{key}: required")
            return
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            errs.append(f"{where}.{key}: expected a finite number")
        elif positive and v <= 0:
            errs.append(f"{where}.{key}: must be positive")

    if kind == "dielectric":
        num("eps_s")
    if kind in ("plasma", "nonlocal_plasma"):
        num("omega_p_thz", positive=True)
        if ("omega_c_thz" in d) == ("b_tesla" in d):
            errs.append(f"{where}: give exactly one of omega_c_thz or b_tesla")
        else:
            num("omega_c_thz" if "omega_c_thz" in d else "b_tesla")
    if kind == "nonlocal_plasma":
        num("k_max_over_c", positive=True, required=False)
        wc = d.get("omega_c_thz", d.get("b_tesla", 1.0))
        if isinstance(wc, (int, float)) and wc == 0:
            errs.append(f"{where}: nonlocal cutoff k_max = ratio·|omega_c|/c needs omega_c != 0")
    return errs


def material_from_json(d: dict, where: str = "material"):
    """Build a model from ``{type, omega_p_thz, omega_c_thz | b_tesla, k_max_over_c?, eps_s?}``.

    ``k_max_over_c`` is the ratio k_max·c/|ωc| (default 100).
    """
    errs = _material_errors(d, where)
    if errs:
        raise DomainError("; ".join(errs))
    kind = d["type"]
    if kind == "vacuum":
        return Vacuum()
    if kind == "dielectric":
        return Dielectric(float(d["eps_s"]))
    wp = thz_to_rad(float(d["omega_p_thz"]))
    if "omega_c_thz" in d:
        base = PlasmaParams(wp, thz_to_rad(float(d["omega_c_thz"])))
    else:
        base = PlasmaParams.from_bias(wp, float(d["b_tesla"]))
    if kind == "plasma":
        return base
    return NonlocalParams.from_ratio(base, float(d.get("k_max_over_c", 100.0)))


def material_to_json(model) -> dict:
    if isinstance(model, Vacuum):
        return {"type": "vacuum"}
    if isinstance(model, Dielectric):
        return {"type": "dielectric", "eps_s": model.eps_s}
    if isinstance(model, PlasmaParams):
        return {"type": "plasma", "omega_p_thz": rad_to_thz(model.omega_p),
                "omega_c_thz": rad_to_thz(model.omega_c)}
    if isinstance(model, NonlocalParams):
        out = material_to_json(model.base)
        out["type"] = "nonlocal_plasma"
        out["k_max_over_c"] = model.k_max * C0 / abs(model.omega_c)
        return out
    raise TypeError(f"cannot serialize {type(model).__name__}")
