"""Hot inner loops with two interchangeable backends.

Each kernel exists as a numba ``@njit`` function and as a vectorized numpy
function with identical semantics. The backend is picked once at import time:

* ``BERRYEM_BACKEND=numpy`` forces the pure-numpy path,
* ``BERRYEM_BACKEND=numba`` (default when numba imports) uses the compiled path.

``use_backend`` switches at runtime, which the tests and the benchmark use to
compare both paths on the same inputs.
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

try:  # pragma: no cover - exercised implicitly by the import
    import numba
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAS_NUMBA = False



def _env_backend() -> str:
    choice = os.environ.get("BERRYEM_BACKEND", "").strip().lower()
    if choice in ("numpy", "python", "off", "0"):
        return "numpy"
    if choice in ("", "numba", "on", "1"):
        return "numba" if HAS_NUMBA else "numpy"
    raise ValueError(f"BERRYEM_BACKEND must be 'numba' or 'numpy', got {choice!r}")


_BACKEND = _env_backend()


def backend() -> str:
    return _BACKEND


def set_backend(name: str) -> None:
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    _BACKEND = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _BACKEND
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def set_threads(n: int | None) -> None:
    """Bound the compiled backend's worker pool. No-op for numpy."""
    if n is None or not HAS_NUMBA:
        return
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)


# ---------------------------------------------------------------- numpy path


def _link_phases_np(wa, wb):
    return np.angle(np.sum(np.conj(wb) * wa, axis=-1))


def _plaquette_phases_np(w):
    # Links along the first axis (i -> i+1) and the second axis (j -> j+1).
    u1 = np.sum(np.conj(w[1:, :, :]) * w[:-1, :, :], axis=-1)
    u2 = np.sum(np.conj(w[:, 1:, :]) * w[:, :-1, :], axis=-1)
    prod = u1[:, :-1] * u2[1:, :] * np.conj(u1[:, 1:]) * np.conj(u2[:-1, :])
    return np.angle(prod)


def _tm_band_y_np(P, K, wc2, upper):
    P = np.asarray(P, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    P, K = np.broadcast_arrays(P, K)
    B = 2.0 * P + K - wc2
    C = P * (P + K - 2.0 * wc2)
    # discriminant as a sum of non-negative terms: no cancellation
    disc = np.sqrt((K - wc2) ** 2 + 4.0 * P * wc2)
    with np.errstate(divide="ignore", invalid="ignore"):
        big_u = 0.5 * (B + disc)
        big_l = 0.5 * (B - disc)
        yu = np.where(B >= 0.0, big_u, np.where(big_l != 0.0, C / big_l, 0.0))
        yl = np.where(B >= 0.0, np.where(big_u != 0.0, C / big_u, 0.0), big_l)
    return yu if upper else yl


def _spp_residual_np(k, k0, eps_s, eps_eff, e11, e12):
    k = np.asarray(k, dtype=np.float64)
    rs = (k / k0) ** 2 - eps_s
    rp = (k / k0) ** 2 - eps_eff
    ok = (rs > 0.0) & (rp > 0.0)
    with np.errstate(invalid="ignore"):
        a_s = k0 * np.sqrt(np.where(ok, rs, np.nan))
        a_p = k0 * np.sqrt(np.where(ok, rp, np.nan))
    return a_s / eps_s + a_p / eps_eff - e12 * k / (e11 * eps_eff)


# ---------------------------------------------------------------- numba path

if HAS_NUMBA:

    @njit(cache=True)
    def _link_phases_nb(wa, wb):
        n, d = wa.shape
        out = np.empty(n)
        for i in range(n):
            acc = 0j
            for c in range(d):
                acc += np.conj(wb[i, c]) * wa[i, c]
            out[i] = np.angle(acc)
        return out

    @njit(cache=True, parallel=True)
    def _plaquette_phases_nb(w):
        n1, n2, d = w.shape
        out = np.empty((n1 - 1, n2 - 1))
        for i in prange(n1 - 1):
            for j in range(n2 - 1):
                a = 0j
                b = 0j
                c_ = 0j
                e = 0j
                for c in range(d):
                    w00 = w[i, j, c]
                    w10 = w[i + 1, j, c]
                    w11 = w[i + 1, j + 1, c]
                    w01 = w[i, j + 1, c]
                    a += np.conj(w10) * w00
                    b += np.conj(w11) * w10
                    c_ += np.conj(w01) * w11
                    e += np.conj(w00) * w01
                out[i, j] = np.angle(a * b * c_ * e)
        return out

    @njit(cache=True)
    def _tm_band_y_nb(P, K, wc2, upper):
        n = P.shape[0]
        out = np.empty(n)
        for i in range(n):
            p = P[i]
            kk = K[i]
            B = 2.0 * p + kk - wc2
            C = p * (p + kk - 2.0 * wc2)
            disc = np.sqrt((kk - wc2) ** 2 + 4.0 * p * wc2)
            if B >= 0.0:
                yu = 0.5 * (B + disc)
                yl = C / yu if yu != 0.0 else 0.0
            else:
                yl = 0.5 * (B - disc)
                yu = C / yl if yl != 0.0 else 0.0
            out[i] = yu if upper else yl
        return out

    @njit(cache=True)
    def _spp_residual_nb(k, k0, eps_s, eps_eff, e11, e12):
        n = k.shape[0]
        out = np.empty(n)
        for i in range(n):
            q = k[i] / k0
            rs = q * q - eps_s
            rp = q * q - eps_eff
            if rs > 0.0 and rp > 0.0:
                out[i] = (k0 * np.sqrt(rs) / eps_s + k0 * np.sqrt(rp) / eps_eff
                          - e12 * k[i] / (e11 * eps_eff))
            else:
                out[i] = np.nan
        return out


# ---------------------------------------------------------------- dispatch


def link_phases(wa: np.ndarray, wb: np.ndarray) -> np.ndarray:
    """arg⟨w_b|w_a⟩ row by row for stacks of unit vectors shaped (n, d)."""
    wa = np.ascontiguousarray(wa, dtype=np.complex128)
    wb = np.ascontiguousarray(wb, dtype=np.complex128)
    if _BACKEND == "numba":
        return _link_phases_nb(wa, wb)
    return _link_phases_np(wa, wb)


def plaquette_phases(w: np.ndarray) -> np.ndarray:
    """Loop phase of every cell of a (n1, n2, d) grid of states.

    Cells are traversed (i,j) → (i+1,j) → (i+1,j+1) → (i,j+1), which is
    counter-clockwise when axis 0 and axis 1 form a right-handed pair.
    """
    w = np.ascontiguousarray(w, dtype=np.complex128)
    if _BACKEND == "numba":
        return _plaquette_phases_nb(w)
    return _plaquette_phases_np(w)


def tm_band_y(P, K, wc2: float, upper: bool) -> np.ndarray:
    """Roots of the TM band polynomial in y = ω² − ω_c².

    ``P`` is the (possibly cutoff-scaled) ω_p², ``K`` is (kc)². The larger
    magnitude root comes from the quadratic formula and its partner from
    the product of roots, so neither suffers cancellation. The lower band
    root lies in [−ω_c², P], the upper one in [P, 2P + K].
    """
    P = np.atleast_1d(np.asarray(P, dtype=np.float64))
    K = np.atleast_1d(np.asarray(K, dtype=np.float64))
    P, K = np.broadcast_arrays(P, K)
    shape = P.shape
    if _BACKEND == "numba":
        out = _tm_band_y_nb(np.ascontiguousarray(P.ravel()), np.ascontiguousarray(K.ravel()),
                            float(wc2), bool(upper))
    else:
        out = _tm_band_y_np(P.ravel(), K.ravel(), float(wc2), bool(upper))
    return out.reshape(shape)


def spp_residual_scan(k, k0, eps_s, eps_eff, e11, e12) -> np.ndarray:
    """Surface-mode residual over real k; NaN where either decay constant is not positive."""
    k = np.ascontiguousarray(np.atleast_1d(k), dtype=np.float64)
    args = tuple(float(v) for v in (k0, eps_s, eps_eff, e11, e12))
    if _BACKEND == "numba":
        return _spp_residual_nb(k, *args)
    return _spp_residual_np(k, *args)
