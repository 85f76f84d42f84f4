import json

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from berryem.constants import C0, EPS0, MU0, Q_E, M_E, thz_to_rad
from berryem.emcore import T6, MaterialMatrix, assemble_material
from berryem.errors import DomainError, ResonanceSingularity
from berryem.media import (RANDOM_FAMILIES, ConstantMedium, Dielectric, Inverted, NonlocalParams,
                           PlasmaParams, TimeReversed, Vacuum, classify_symmetry, invert_material,
                           m_infinity, material_from_json, material_to_json, plasma_permittivity,
                           random_material, regularize_nonlocal, time_reverse_material)

# Frozen from exact rational arithmetic: ωp/ω = 0.84, ωc/ω = 0.15
ROT_E11 = 0.2781585677749361
ROT_E12_MAG = 0.10827621483375958

wp_thz = st.floats(0.5, 50.0)
_D = np.diag([EPS0 ** -0.5] * 3 + [MU0 ** -0.5] * 3)


def differs(a, b, rel=1e-6):
    a, b = _D @ a @ _D, _D @ b @ _D
    return np.linalg.norm(a - b) > rel * np.linalg.norm(b)
ratio = st.floats(-2.0, 2.0)


def test_unbiased_at_plasma_frequency_vanishes():
    w = thz_to_rad(10.0)
    e = plasma_permittivity(PlasmaParams(w, 0.0), w)
    assert np.allclose(e, 0.0, atol=1e-15)


def test_rotation_case_golden_values():
    w = thz_to_rad(10.0)
    p = PlasmaParams(0.84 * w, 0.15 * w)
    e11, e12, _ = p.components(w)
    assert e11 == pytest.approx(ROT_E11, rel=1e-14)
    assert e12 == pytest.approx(-ROT_E12_MAG, rel=1e-14)  # ε12 is odd in ωc and negative for ωc > 0


@given(wp_thz, ratio, st.floats(0.05, 5.0))
def test_permittivity_hermitian_and_bias_conjugation(fp, r, wr):
    p = PlasmaParams.from_thz(fp, r * fp)
    w = thz_to_rad(wr * fp)
    assume(abs(w - abs(p.omega_c)) > 1e-6 * w)
    e = plasma_permittivity(p, w)
    assert np.allclose(e, e.conj().T, rtol=0, atol=0)
    flipped = plasma_permittivity(p.with_omega_c(-p.omega_c), w)
    assert np.allclose(flipped, e.conj(), rtol=1e-14, atol=0)


def test_resonance_guard():
    p = PlasmaParams.from_thz(10.0, 2.0)
    with pytest.raises(ResonanceSingularity):
        p.components(abs(p.omega_c))
    with pytest.raises(ResonanceSingularity):
        p.components(0.0)


def test_bias_conversion_uses_electron_charge():
    p = PlasmaParams.from_bias(thz_to_rad(10.0), 1.0)
    assert p.omega_c == pytest.approx(Q_E * 1.0 / M_E, rel=1e-15)
    assert p.omega_c < 0


def test_regularize_limits(regularized):
    w = thz_to_rad(12.0)
    base = regularized.base
    m0 = regularize_nonlocal(regularized, w, [0, 0, 0]).m
    assert np.array_equal(m0, base.matrix(w).m)
    kk = regularized.k_max
    half = regularize_nonlocal(regularized, w, [kk, 0, 0]).m
    expect = m_infinity() + 0.5 * (base.matrix(w).m - m_infinity())
    assert np.allclose(half, expect, rtol=1e-12, atol=1e-12 * EPS0)
    assert kk == pytest.approx(100 * abs(base.omega_c) / C0, rel=1e-15)


@given(st.floats(-3, 3), st.floats(0.2, 3.0))
def test_regularize_hermitian_and_local_limit(lk, wr):
    base = PlasmaParams.from_thz(10.0, 2.0)
    w = thz_to_rad(10.0 * wr)
    assume(abs(w - abs(base.omega_c)) > 1e-6 * w)
    k = 10 ** lk * base.omega_p / C0
    m = regularize_nonlocal(NonlocalParams.from_ratio(base, 100.0), w, [k, 0, 0])
    assert m.hermitian_residual() <= 1e-12
    far = regularize_nonlocal(NonlocalParams(base, 1e12 * k), w, [k, 0, 0]).m
    scale = np.linalg.norm(base.matrix(w).m)
    assert np.linalg.norm(far - base.matrix(w).m) <= 1e-12 * scale


def test_time_reversal_examples():
    w = thz_to_rad(12.0)
    m0 = PlasmaParams.from_thz(10.0, 0.0).matrix(w)
    assert np.allclose(time_reverse_material(m0).m, m0.m, rtol=0, atol=0)
    p = PlasmaParams.from_thz(10.0, 2.0)
    m = p.matrix(w)
    tr = time_reverse_material(m)
    assert differs(tr.m, m.m)
    assert np.allclose(tr.m, p.with_omega_c(-p.omega_c).matrix(w).m, rtol=1e-14, atol=0)
    assert np.array_equal(time_reverse_material(tr).m, m.m)


def test_inversion_examples(rng):
    w = thz_to_rad(12.0)
    m = PlasmaParams.from_thz(10.0, 2.0).matrix(w)
    assert np.array_equal(invert_material(m).m, m.m)
    chiral = assemble_material(np.eye(3), 0.3j * np.eye(3), -0.3j * np.eye(3))
    assert differs(invert_material(chiral).m, chiral.m)
    assert np.array_equal(invert_material(invert_material(chiral)).m, chiral.m)


@given(st.integers(0, 2**32 - 1), st.sampled_from(RANDOM_FAMILIES))
def test_operators_are_involutions(seed, fam):
    m = random_material(np.random.default_rng(seed), fam)
    assert np.allclose(time_reverse_material(time_reverse_material(m)).m, m.m, rtol=0, atol=0)
    assert np.allclose(invert_material(invert_material(m)).m, m.m, rtol=0, atol=0)


def test_wrapped_models_evaluate_at_minus_k(regularized):
    w = thz_to_rad(12.0)
    k = np.array([3e5, 1e5, 0.0])
    a = TimeReversed(regularized).matrix(w, k)
    b = time_reverse_material(regularized.matrix(w, -k))
    assert np.array_equal(a.m, b.m) and np.array_equal(a.k, k)
    assert np.array_equal(Inverted(regularized).matrix(w, k).m, T6 @ regularized.matrix(w, -k).m @ T6)


@pytest.mark.parametrize("model,flags", [
    (Vacuum(), (True, True, True, True)),
    (Dielectric(2.5), (True, True, True, True)),
    (PlasmaParams.from_thz(10.0, 0.0), (True, True, True, True)),
    (PlasmaParams.from_thz(10.0, 2.0), (True, False, True, False)),
    (NonlocalParams.from_ratio(PlasmaParams.from_thz(10.0, 2.0)), (True, False, True, False)),
])
def test_classify_examples(model, flags):
    ks = [np.zeros(3), np.array([2e5, -1e5, 0.0])]
    r = classify_symmetry(model, thz_to_rad(12.0), ks)
    assert (r.lossless, r.tr_invariant, r.inversion_invariant, r.reciprocal) == flags
    assert r.theorem_holds


@given(st.integers(0, 2**32 - 1), st.sampled_from(RANDOM_FAMILIES))
def test_random_family_theorem(seed, fam):
    r = classify_symmetry(ConstantMedium(random_material(np.random.default_rng(seed), fam)))
    assert r.theorem_holds
    if fam == "reciprocal":
        assert r.lossless and r.reciprocal and r.tr_invariant
    elif fam == "lossy":
        assert not r.lossless
    else:
        assert r.lossless and not r.reciprocal and not r.tr_invariant


@pytest.mark.parametrize("d", [
    {"type": "vacuum"},
    {"type": "dielectric", "eps_s": -2.0},
    {"type": "plasma", "omega_p_thz": 10.0, "omega_c_thz": 2.0},
    {"type": "nonlocal_plasma", "omega_p_thz": 10.0, "omega_c_thz": 2.0, "k_max_over_c": 100.0},
])
def test_json_round_trip(d):
    m = material_from_json(d)
    again = material_from_json(json.loads(json.dumps(material_to_json(m))))
    assert again == m


@pytest.mark.parametrize("d,needle", [
    ({"type": "plasma", "omega_p_thz": 10.0}, "omega_c_thz or b_tesla"),
    ({"type": "plasma", "omega_p_thz": -1.0, "omega_c_thz": 2.0}, "omega_p_thz"),
    ({"type": "nonlocal_plasma", "omega_p_thz": 10.0, "omega_c_thz": 2.0, "k_max_over_c": -3},
     "k_max_over_c"),
    ({"type": "plasma", "omega_p_thz": 10.0, "omega_c_thz": 2.0, "bogus": 1}, "bogus"),
    ({"type": "metal"}, "type"),
])
def test_json_errors_name_field(d, needle):
    with pytest.raises(DomainError, match=needle):
        material_from_json(d)
