import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from berryem.berry import (KGrid, KLoop, band_states, berry_field, berry_phase_loop,
                           chern_number, connection_numeric, connection_tm_analytic,
                           cp_chern_number, cp_connection_curvature, cp_envelope,
                           cp_loop_integral, curvature_tm_analytic, gap_chern_number,
                           incremental_berry_phase, plaquette_curvature, q_peak, q_similarity,
                           solid_angle_left, spherical_path_phase, wrap_phase)
from berryem.bulk import solve_bulk_band
from berryem.constants import C0, EPS0, MU0
from berryem.emcore import assemble_material
from berryem.errors import (BandNotFound, DegeneratePath, DegeneratePoint, NonConvergent,
                            PolarSingularity)
from berryem.media import PlasmaParams

# Frozen from the closed-form connection at ω/2π = 10, ωp/2π = 9, ωc/2π = 1.73 THz
DELTA_GAMMA_1DEG = -0.017169866898286562


def on_shell(p, k, band="upper"):
    s = solve_bulk_band(p, float(np.hypot(k[0], k[1])), band)
    return s.omega, s.detuning


def test_wrap_phase():
    assert wrap_phase(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_phase(-math.pi) == math.pi
    assert np.allclose(wrap_phase(np.array([0.1, 2 * math.pi + 0.1])), [0.1, 0.1])


def test_kloop_validation():
    with pytest.raises(DegeneratePath):
        KLoop(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(DegeneratePath):
        KLoop(np.array([[0.0, 0.0], [0.0, 0.0]]))
    loop = KLoop.circle(1.0, 8)
    assert np.array_equal(loop.points[0], loop.points[-1])


def test_unbiased_connection_and_curvature_vanish(unbiased):
    k = (3e5, -1e5)
    w, y = on_shell(unbiased, k)
    assert np.array_equal(connection_tm_analytic(unbiased, k, w, y), [0.0, 0.0])
    assert curvature_tm_analytic(unbiased, k, w, y) == 0.0


@given(st.floats(0, 2 * math.pi), st.floats(-2, 1), st.sampled_from(["lower", "upper"]))
def test_connection_is_azimuthal(phi, lk, band):
    p = PlasmaParams.from_thz(10.0, 2.0)
    kk = 10 ** lk * p.omega_p / C0
    k = (kk * math.cos(phi), kk * math.sin(phi))
    w, y = on_shell(p, k, band)
    a = connection_tm_analytic(p, k, w, y)
    assert abs(a[0] * k[0] + a[1] * k[1]) <= 1e-12 * np.linalg.norm(a) * kk


@given(st.floats(0, 2 * math.pi), st.floats(-2, 1), st.sampled_from(["lower", "upper"]))
def test_curvature_parity(phi, lk, band):
    p = PlasmaParams.from_thz(10.0, 2.0)
    kk = 10 ** lk * p.omega_p / C0
    k = np.array([kk * math.cos(phi), kk * math.sin(phi)])
    w, y = on_shell(p, k, band)
    f1 = curvature_tm_analytic(p, k, w, y)
    f2 = curvature_tm_analytic(p, -k, w, y)
    assert f1 == pytest.approx(f2, rel=1e-12, abs=1e-300)
    grid = KGrid.square(0.05 * kk, 3, tuple(k))
    grid_m = KGrid.square(0.05 * kk, 3, tuple(-k))
    fp = plaquette_curvature(p, band, grid)
    fm = plaquette_curvature(p, band, grid_m)
    # the −k grid is the +k grid rotated by π, so cells pair up in reverse order
    # link round-off is ~1e-15 rad per plaquette
    area = (0.05 * kk) ** 2
    assert np.allclose(fp, fm[::-1, ::-1], rtol=1e-9, atol=1e-14 / area)


def test_incremental_berry_phase_value(qcase):
    p, w = qcase
    dg = incremental_berry_phase(p, w, math.radians(1.0))
    assert dg == pytest.approx(DELTA_GAMMA_1DEG, rel=1e-12)
    assert round(abs(dg), 3) == 0.017


def test_numeric_connection_matches_closed_form(biased):
    k = np.array([0.8, 0.5]) * biased.omega_p / C0
    w, y = on_shell(biased, k)
    a = connection_tm_analytic(biased, k, w, y)
    n = connection_numeric(biased, "upper", k)
    assert np.allclose(n, a, rtol=1e-5, atol=1e-5 * np.linalg.norm(a))


def test_numeric_connection_first_order(biased):
    k = np.array([0.8, 0.5]) * biased.omega_p / C0
    w, y = on_shell(biased, k)
    a = connection_tm_analytic(biased, k, w, y)
    d = 1e-3 * np.linalg.norm(k)
    e1 = np.linalg.norm(connection_numeric(biased, "upper", k, d) - a)
    e2 = np.linalg.norm(connection_numeric(biased, "upper", k, d / 2) - a)
    assert e1 / e2 == pytest.approx(2.0, abs=0.1)


def test_te_connection_zero(biased):
    k = np.array([0.8, 0.5]) * biased.omega_p / C0
    assert np.array_equal(connection_numeric(biased, "te", k), [0.0, 0.0])


def test_gauge_shift(biased):
    k = np.array([0.8, 0.5]) * biased.omega_p / C0
    s = biased.omega_p / C0
    xi = lambda q: math.sin(q[0] / s) + 0.3 * (q[1] / s) ** 2
    grad = np.array([math.cos(k[0] / s) / s, 0.6 * k[1] / s ** 2])
    d = 1e-7 * np.linalg.norm(k)
    a = connection_numeric(biased, "upper", k, d)
    b = connection_numeric(biased, "upper", k, d, gauge=xi)
    assert np.allclose(b - a, -grad, rtol=1e-5, atol=1e-5 * np.linalg.norm(grad))


def test_loop_phase_unbiased_zero(unbiased):
    loop = KLoop.circle(0.7 * unbiased.omega_p / C0, 64)
    assert berry_phase_loop(unbiased, "upper", loop) == pytest.approx(0.0, abs=1e-13)


def test_loop_phase_matches_line_integral(biased):
    kk = 0.6 * biased.omega_p / C0
    w, y = on_shell(biased, (kk, 0.0))
    a_phi = connection_tm_analytic(biased, (kk, 0.0), w, y)[1]
    loop = KLoop.circle(kk, 20000)
    got = berry_phase_loop(biased, "upper", loop, reduce=False)
    assert got == pytest.approx(2 * math.pi * kk * a_phi, rel=1e-6)


@given(st.integers(0, 2**32 - 1))
def test_loop_phase_gauge_invariant(seed):
    p = PlasmaParams.from_thz(10.0, 2.0)
    loop = KLoop.circle(0.6 * p.omega_p / C0, 256, (0.1 * p.omega_p / C0, 0.0))
    chi = np.random.default_rng(seed).uniform(-math.pi, math.pi, 256)
    a = berry_phase_loop(p, "upper", loop)
    b = berry_phase_loop(p, "upper", loop, phases=chi)
    assert abs(wrap_phase(a - b)) <= 1e-10


def test_berry_field_grid(biased):
    s = biased.omega_p / C0
    grid = KGrid.square(0.2 * s, 8, (1.0 * s, 0.4 * s))
    bf = berry_field(biased, "upper", grid)
    assert bf.A.shape == (7, 7, 2) and bf.F.shape == (7, 7)
    assert "analytic" in bf.gauge_tag
    te = berry_field(biased, "te", grid)
    assert np.array_equal(te.A, np.zeros_like(te.A)) and np.array_equal(te.F, np.zeros_like(te.F))


def test_degenerate_point_is_unavailable(unbiased):
    with pytest.raises(DegeneratePoint):
        band_states(unbiased, "upper").state([0.0, 0.0])


def test_generic_band_states_reject_degenerate_vacuum():
    vac = assemble_material(np.eye(3))
    with pytest.raises(DegeneratePoint):
        band_states(vac, 4).state([1e5, 0.0, 0.0])
    with pytest.raises(BandNotFound):
        band_states(vac, 7)


def test_chern_numbers(regularized):
    up = chern_number(regularized, "upper")
    lo = chern_number(regularized, "lower")
    assert up.nearest_integer == 1 and up.deviation < 1e-2
    assert lo.nearest_integer == -2 and lo.deviation < 1e-2
    assert gap_chern_number(regularized) == -1


def test_chern_convergence_ladder(regularized):
    devs = [chern_number(regularized, "lower", n_radial=n, n_angular=n).deviation
            for n in (64, 128, 256)]
    for a, b in zip(devs, devs[1:]):
        assert b <= 1.1 * a + 1e-12


def test_local_lower_band_is_not_integer(biased):
    with pytest.raises(NonConvergent) as exc:
        chern_number(biased, "lower", n_radial=64, n_angular=64)
    assert exc.value.result.deviation > 0.05
    assert chern_number(biased, "upper", n_radial=64, n_angular=64).nearest_integer == 1


@pytest.mark.parametrize("h", [1, -1])
def test_cp_closed_forms(h):
    A, F = cp_connection_curvature([1.0, 0.0, 0.0], 2.0, h)
    assert A[2] == pytest.approx(0.0, abs=1e-16)
    assert F[0] == -h / 4.0  # radial part equals ∓ Gaussian curvature 1/k²
    with pytest.raises(PolarSingularity):
        cp_connection_curvature([0.0, 0.0, 1.0], 1.0, h)


@pytest.mark.parametrize("h", [1, -1])
def test_cp_envelope_is_normalized_vacuum_mode(h):
    khat = np.array([0.3, -0.4, 0.866])
    khat /= np.linalg.norm(khat)
    f = cp_envelope(khat, h)
    e, hh = f[:3], f[3:]
    assert EPS0 * np.vdot(e, e).real + MU0 * np.vdot(hh, hh).real == pytest.approx(1.0)
    # H = k̂ × E / η0 for a vacuum plane wave
    assert np.allclose(hh, np.cross(khat, e) / math.sqrt(MU0 / EPS0), rtol=1e-12)


def test_cp_chern_pair():
    cp = cp_chern_number(1)
    cm = cp_chern_number(-1)
    assert abs(abs(cp) - 2) < 1e-8 and abs(abs(cm) - 2) < 1e-8
    assert cp == pytest.approx(-cm)


OCTANT = [[0, 0, 1], [1, 0, 0], [0, 1, 0]]


@pytest.mark.parametrize("h", [1, -1])
def test_octant_phase(h):
    ph = spherical_path_phase(OCTANT, h)
    assert abs(abs(ph) - math.pi / 2) < 1e-8
    assert cp_loop_integral(OCTANT, h) == pytest.approx(ph, abs=1e-10)


def test_octant_phase_signs_flip_with_helicity_and_orientation():
    assert spherical_path_phase(OCTANT, 1) == -spherical_path_phase(OCTANT, -1)
    rev = OCTANT[::-1]
    assert solid_angle_left(rev) == pytest.approx(4 * math.pi - solid_angle_left(OCTANT))


def test_great_circle_and_two_point_paths():
    eq = [[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]]
    assert abs(spherical_path_phase(eq, 1)) == pytest.approx(2 * math.pi, abs=1e-12)
    assert spherical_path_phase([[1, 0, 0], [0, 1, 0]], 1) == 0.0
    with pytest.raises(DegeneratePath):
        spherical_path_phase([[1, 0, 0], [2, 0, 0], [0, 1, 0]], 1)


@given(st.lists(st.tuples(st.floats(0.2, 1.3), st.floats(0, 2 * math.pi)), min_size=3,
                max_size=6, unique_by=lambda t: round(t[1], 2)))
def test_path_phase_matches_line_integral(pts):
    # star-shaped polygons in the northern cap, vertices sorted by azimuth
    pts = sorted(pts, key=lambda t: t[1])
    path = [[math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)] for t, p in pts]
    gaps = np.diff([p for _, p in pts] + [pts[0][1] + 2 * math.pi])
    if np.any(gaps >= math.pi - 1e-3) or np.any(gaps < 1e-2):
        return
    ph = spherical_path_phase(path, 1)
    li = cp_loop_integral(path, 1)
    assert abs(wrap_phase(ph - li)) <= 1e-8


def test_q_similarity_identity(qcase):
    p, w = qcase
    assert q_similarity(p, w, 0.0, 0.0, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_q_peak_signed_like_connection(qcase):
    p, w = qcase
    peak = q_peak(p, w, math.radians(1.0))
    assert np.sign(peak) == np.sign(incremental_berry_phase(p, w, math.radians(1.0)))
    assert abs(peak - incremental_berry_phase(p, w, math.radians(1.0))) < 5e-3
