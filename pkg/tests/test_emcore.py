import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from berryem.constants import C0, EPS0, MU0, thz_to_rad
from berryem.emcore import (T6, MaterialMatrix, assemble_curl, assemble_material, cross_matrix,
                            energy_weight, hermitian_inv_sqrt, hermitian_sqrt, inner_product,
                            six_vector, solve_eigenmodes, split_six)
from berryem.errors import EvaluationOutsideDomain, NotPositiveDefinite
from berryem.media import PlasmaParams

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
kvec = arrays(float, 3, elements=st.floats(-1e7, 1e7, allow_nan=False))


def random_pd(rng, n=6):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + n * np.eye(n)


def vacuum():
    return assemble_material(np.eye(3))


def test_six_vector_round_trip():
    f = six_vector([1, 2j, 3], [4, 5, -6j])
    e, h = split_six(f)
    assert np.array_equal(e, [1, 2j, 3]) and np.array_equal(h, [4, 5, -6j])


@given(kvec, arrays(float, 3, elements=finite))
def test_cross_matrix_is_cross_product(k, v):
    assert np.allclose(cross_matrix(k) @ v, np.cross(k, v), rtol=1e-12, atol=1e-9 * (1 + np.abs(k).max() * np.abs(v).max()))


def test_vacuum_material_is_diagonal():
    assert np.allclose(vacuum().m, np.diag([EPS0] * 3 + [MU0] * 3), rtol=0, atol=0)


def test_plasma_block_vanishes_at_plasma_frequency():
    w = thz_to_rad(10.0)
    m = PlasmaParams(w, 0.0).matrix(w)
    assert np.allclose(m.eps[:2, :2], 0.0, atol=1e-15) and abs(m.eps[2, 2]) < 1e-15


def test_hermitian_blocks_give_hermitian_matrix(rng):
    eps = random_pd(rng, 3)
    mu = random_pd(rng, 3)
    xi = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    m = assemble_material(eps, xi, xi.conj().T, mu)
    assert m.hermitian_residual() <= 1e-12


def test_material_matrix_is_read_only():
    m = vacuum()
    with pytest.raises(ValueError):
        m.m[0, 0] = 1.0


def test_curl_zero_and_axis():
    assert np.array_equal(assemble_curl([0, 0, 0]).n, np.zeros((6, 6)))
    n = assemble_curl([0, 0, 2.0]).n
    assert np.allclose(n, n.conj().T)
    assert n[0, 4] == 2.0 and n[1, 3] == -2.0 and n[3, 1] == -2.0 and n[4, 0] == 2.0


@given(kvec)
def test_curl_is_odd_and_hermitian(k):
    n = assemble_curl(k).n
    assert np.array_equal(assemble_curl(-k).n, -n)
    assert np.array_equal(n, n.conj().T)


def test_hermitian_sqrt_examples():
    assert np.allclose(hermitian_sqrt(np.diag([4.0, 1, 1, 1, 1, 1])), np.diag([2.0, 1, 1, 1, 1, 1]))
    assert np.allclose(hermitian_sqrt(np.eye(6)), np.eye(6))


@given(st.integers(0, 2**32 - 1))
def test_hermitian_sqrt_squares_and_commutes(seed):
    m = random_pd(np.random.default_rng(seed))
    s = hermitian_sqrt(m)
    scale = np.linalg.norm(m)
    assert np.linalg.norm(s @ s - m) <= 1e-12 * scale
    assert np.linalg.norm(s @ m - m @ s) <= 1e-10 * scale ** 1.5
    assert np.allclose(hermitian_inv_sqrt(m) @ s, np.eye(6), atol=1e-12)


def test_hermitian_sqrt_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        hermitian_sqrt(np.diag([1.0, -1, 1, 1, 1, 1]))
    with pytest.raises(ValueError):
        hermitian_sqrt(np.triu(np.ones((6, 6))))


def test_vacuum_spectrum():
    k0 = 1e5
    om = [m.omega for m in solve_eigenmodes(vacuum(), [0, 0, k0])]
    expect = np.array([-1, -1, 0, 0, 1, 1]) * C0 * k0
    assert np.allclose(om, expect, rtol=1e-12, atol=1e-6 * C0 * k0)
    assert [m.multiplicity for m in solve_eigenmodes(vacuum(), [0, 0, k0])] == [2] * 6
    assert all(m.omega == 0.0 for m in solve_eigenmodes(vacuum(), [0, 0, 0]))


def test_dielectric_spectrum():
    k0 = 3e4
    om = [m.omega for m in solve_eigenmodes(assemble_material(4 * np.eye(3)), [k0, 0, 0])]
    assert np.allclose(om, np.array([-1, -1, 0, 0, 1, 1]) * C0 * k0 / 2, rtol=1e-12,
                       atol=1e-6 * C0 * k0)


def _si(m):
    d = np.diag([EPS0] * 3 + [MU0] * 3) ** 0.5
    return MaterialMatrix(d @ m @ d)


def _check_modes(mat, k):
    modes = solve_eigenmodes(mat, k)
    om = np.array([m.omega for m in modes])
    scale = np.abs(om).max()
    assert np.sum(np.abs(om) <= 1e-9 * scale) == 2
    w = np.array([m.w for m in modes])
    assert np.allclose(w.conj() @ w.T, np.eye(6), atol=1e-9)
    n = assemble_curl(k).n
    for m in modes:
        if abs(m.omega) > 1e-9 * scale:
            lhs = n @ m.f
            assert np.linalg.norm(lhs - m.omega * mat.m @ m.f) <= 1e-9 * np.linalg.norm(lhs)
    return om, scale


@given(st.integers(0, 2**32 - 1), kvec.filter(lambda k: np.linalg.norm(k) > 1.0))
def test_bianisotropic_spectrum(seed, k):
    _check_modes(_si(random_pd(np.random.default_rng(seed))), k)


@given(st.integers(0, 2**32 - 1), kvec.filter(lambda k: np.linalg.norm(k) > 1.0))
def test_block_diagonal_spectrum_pairs(seed, k):
    # ±ω pairing needs T6 M T6 = M, i.e. no magneto-electric coupling
    rng = np.random.default_rng(seed)
    m = random_pd(rng)
    m[:3, 3:] = 0.0
    m[3:, :3] = 0.0
    mat = _si(m)
    om, scale = _check_modes(mat, k)
    assert np.allclose(np.sort(om), np.sort(-om), atol=1e-9 * scale)
    om_minus = np.array([x.omega for x in solve_eigenmodes(mat, -k)])
    assert np.allclose(np.sort(om), np.sort(om_minus), atol=1e-9 * scale)


def test_inner_product():
    modes = solve_eigenmodes(assemble_material(np.diag([2.0, 3.0, 5.0])), [1e4, 2e4, 0])
    for a in modes:
        assert abs(inner_product(a.w, a.w, np.eye(6)) - 1) < 1e-12
        assert abs(inner_product(a.f, a.f, a.weight) - 1) < 1e-12
    assert abs(inner_product(modes[0].f, modes[5].f, modes[0].weight)) < 1e-10
    # circular vacuum pair along z: (x ± i y) with H = ±i E/η0 pattern
    fp = six_vector([1, 1j, 0], [-1j, 1, 0])
    fm = six_vector([1, -1j, 0], [1j, 1, 0])
    assert abs(inner_product(fp, fm, np.eye(6))) == 0.0


def test_energy_weight_constant_medium_returns_m():
    m = assemble_material(np.diag([2.0, 3.0, 4.0]))
    assert np.array_equal(energy_weight(m, 1e12, [0, 0, 0]), m.m)


def test_energy_weight_plasma_analytic_matches_fd(qcase):
    p, w = qcase

    class NoAnalytic:
        def matrix(self, omega, k):
            return p.matrix(omega, k)

        def resonances(self, k=None):
            return p.resonances(k)

    a = energy_weight(p, w, [0, 0, 0])
    b = energy_weight(NoAnalytic(), w, [0, 0, 0])
    assert np.linalg.norm(a - b) <= 1e-6 * np.linalg.norm(a)
    # β11 = ∂ω(ω ε0 ε11) and β12 = ∂ω(ω ε0 iε12) in the upper-left block
    e11 = lambda x: p.components(x)[0]
    e12 = lambda x: p.components(x)[1]
    h = 1e-4 * w
    d11 = ((w + h) * e11(w + h) - (w - h) * e11(w - h)) / (2 * h)
    d12 = ((w + h) * e12(w + h) - (w - h) * e12(w - h)) / (2 * h)
    assert a[0, 0].real == pytest.approx(EPS0 * d11, rel=1e-6)
    assert a[0, 1] == pytest.approx(1j * EPS0 * d12, rel=1e-6)


def test_energy_weight_refuses_pole():
    p = PlasmaParams.from_thz(9.0, 1.73)

    class NoAnalytic:
        def matrix(self, omega, k):
            return p.matrix(omega, k)

        def resonances(self, k=None):
            return p.resonances(k)

    with pytest.raises(EvaluationOutsideDomain):
        energy_weight(NoAnalytic(), abs(p.omega_c) * (1 + 5e-6), [0, 0, 0])


def test_t6_involution():
    assert np.array_equal(T6 @ T6, np.eye(6))
