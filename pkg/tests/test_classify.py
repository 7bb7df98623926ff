from dataclasses import replace

import numpy as np
import pytest

from logic.classify import (DeformationPath, classify_collection, decompose_exact, decompose_numeric,
                            fourier_upsample, integrate_path, ramification_path, restart_sensitivity, shear_path,
                            straight_line_path, taylor_shift, vector_field, verify_pullback)
from logic.contour import circle_nodes, roots_on_circle
from logic.errors import InputError, RigidGerm, ToleranceExceeded
from logic.family import assemble_collection, build_family, fiber_classification
from logic.germ import normalize_germ
from logic.local_algebra import basis_coordinates
from logic.series import TruncSeries, YPolySeries

STEPS = 8


def identity_u(nodes, d):
    u = np.zeros((nodes, d), dtype=complex)
    u[:, 1] = 1.0
    return u


def test_taylor_shift():
    out = taylor_shift(np.array([[0, 0, 1], [1, 0, 0]]), [1.0, 2.0])
    assert np.allclose(out, [[1, 2, 1], [1, 0, 0]])


def test_exact_decomposition_of_one(e1_family):
    order = e1_family.settings.truncation(e1_family.r)
    one = YPolySeries.constant(TruncSeries.one(order))
    dec = decompose_exact(one, YPolySeries.y(order), e1_family)
    assert np.allclose(dec.c, [1, 0, 0, 0], atol=1e-8)
    assert dec.residual < 1e-8


def test_exact_decomposition_along_fy(e1_family):
    order = e1_family.settings.truncation(e1_family.r)
    f = e1_family.germ.ypoly(order)
    dec = decompose_exact(f.dy() * YPolySeries.y(order), YPolySeries.y(order), e1_family)
    assert np.allclose(dec.c, 0, atol=1e-8)
    assert dec.b.coeff(1).coeff(0) == pytest.approx(1, abs=1e-8)
    assert dec.b.coeff(0).is_zero(1e-8)
    assert dec.residual < 1e-8


def test_numeric_decomposition(e1_family):
    t = np.zeros(4)
    sheets = roots_on_circle(e1_family.coeff_fn(t), e1_family.contour_radius, 64)
    x, y = sheets.x_nodes, sheets.sheets
    xc = x[:, None]
    h = e1_family.quotient.g_values(xc, y)[:, :, 2] + 0.5 * e1_family.evaluate_dy(xc, y, t) * y
    dec = decompose_numeric(e1_family, t, x, y, h, identity_u(64, 3))
    assert np.allclose(dec.c, [0, 0, 1, 0], atol=1e-9)
    assert np.allclose(dec.b, np.tile([0, 0.5, 0], (64, 1)), atol=1e-9)
    assert dec.residual < 1e-10


def test_vector_field_of_straight_line(e1_family, t_star):
    path = straight_line_path(e1_family, t_star)
    c, b = vector_field(path, 0.0, (np.zeros(4, dtype=complex), identity_u(64, 3)), e1_family)
    assert np.allclose(c, t_star, atol=1e-10)
    assert np.allclose(b, 0, atol=1e-10)


def test_vector_field_of_constant_path(e1_family):
    path = DeformationPath.pullback(e1_family, lambda s: np.zeros(4), lambda s: np.zeros(4))
    c, b = vector_field(path, 0.5, (np.zeros(4, dtype=complex), identity_u(64, 3)), e1_family)
    assert np.allclose(c, 0, atol=1e-12) and np.allclose(b, 0, atol=1e-12)


def test_straight_line(e1_family, t_star):
    res = integrate_path(straight_line_path(e1_family, t_star), e1_family, steps=STEPS, halving=False)
    assert np.max(np.abs(res.phi_final - t_star)) < 1e-6
    assert np.max(np.abs(res.u_final - identity_u(64, 3))) < 1e-8
    assert res.phi_samples[0][0] == 0.0 and not np.any(res.phi_samples[0][1])
    assert len(res.phi_samples) == STEPS + 1
    assert res.residual <= res.tolerance
    out = res.to_json()
    assert out["basis"] == ["1", "x", "y", "x*y"] and out["steps"] == STEPS


def test_shear(e1_family, t_star):
    eps = 1e-3
    res = integrate_path(shear_path(e1_family, t_star, eps), e1_family, steps=STEPS, halving=False)
    assert np.max(np.abs(res.phi_final - t_star)) < 1e-6
    want = identity_u(64, 3)
    want[:, 0] = eps * circle_nodes(e1_family.contour_radius, 64)
    assert np.max(np.abs(res.u_final - want)) < 1e-7
    assert res.u_series[0].coeff(1) == pytest.approx(eps, abs=1e-9)


def test_reparameterization(e1_family, t_star):
    path = straight_line_path(e1_family, t_star / 2).reparameterized(lambda s: s * s + s, lambda s: 2 * s + 1)
    res = integrate_path(path, e1_family, steps=STEPS, halving=False)
    assert np.max(np.abs(res.phi_final - t_star)) < 1e-6


def test_step_halving_is_recorded(e1_family, t_star):
    res = integrate_path(straight_line_path(e1_family, t_star), e1_family, steps=4)
    assert res.halving_diff is not None and res.halving_diff < 1e-9
    assert res.notes == ()


def test_verify_pullback(e1_family, t_star):
    path = straight_line_path(e1_family, t_star)
    res = integrate_path(path, e1_family, steps=STEPS, halving=False)
    check = verify_pullback(path, res, e1_family)
    assert check.residual < 1e-10 and check.unit_deviation < 1e-10
    corrupted = replace(res, u_samples=[u + np.array([1e-4, 0, 0]) for u in res.u_samples])
    assert verify_pullback(path, corrupted, e1_family).residual > 1e-5


def test_restart_sensitivity(e1_family, t_star):
    path = straight_line_path(e1_family, t_star)
    assert restart_sensitivity(path, e1_family, steps=STEPS) < 1e-6


def test_rigid_germ(fast_settings):
    germ = normalize_germ([(0, 1, 1.0), (2, 0, -1.0)])
    fam = build_family(germ, fast_settings)
    path = DeformationPath.from_terms([(0, 1, 0, 1.0), (2, 0, 0, -1.0), (0, 0, 1, 1.0)], germ)
    with pytest.raises(RigidGerm):
        integrate_path(path, fam)


def test_path_validation(e1_family):
    germ = e1_family.germ
    with pytest.raises(InputError):
        DeformationPath.from_terms([], germ)
    with pytest.raises(InputError):
        DeformationPath.from_terms([(2, 0, 0, 1.0)], germ)
    with pytest.raises(InputError):
        DeformationPath.from_terms([(0, 3, 0, 1.0), (2, 0, 0, -2.0)], germ).check_base(e1_family)
    with pytest.raises(InputError):
        straight_line_path(e1_family, np.zeros(4)).ds_ypoly(8)


def test_term_path_matches_family(e1_family, t_star):
    terms = [(0, 3, 0, 1.0), (2, 0, 0, -1.0), (0, 0, 1, t_star[0]), (0, 1, 1, t_star[2])]
    path = DeformationPath.from_terms(terms, e1_family.germ)
    res = integrate_path(path, e1_family, steps=STEPS, halving=False)
    assert np.max(np.abs(res.phi_final - t_star)) < 1e-6
    ds = path.ds_ypoly(8)
    assert ds.coeff(0).coeff(0) == pytest.approx(t_star[0])


def test_tolerance_exceeded(e1_family, t_star, fast_settings):
    strict = replace(fast_settings, residual_tol=1e-300)
    with pytest.raises(ToleranceExceeded):
        integrate_path(straight_line_path(e1_family, t_star), e1_family, steps=2, settings=strict, halving=False)


def test_classify_collection(e1_family, t_star):
    coll = assemble_collection([e1_family])
    results, phi = classify_collection(coll, [straight_line_path(e1_family, t_star)], steps=STEPS)
    assert len(results) == 1
    assert np.max(np.abs(phi - t_star)) < 1e-6
    with pytest.raises(InputError):
        classify_collection(coll, [])


def test_fourier_upsample():
    coarse = circle_nodes(0.5, 16) ** 3
    assert np.allclose(fourier_upsample(coarse), circle_nodes(0.5, 32) ** 3, atol=1e-14)
    two = np.stack([coarse, 2 * coarse], axis=-1)
    assert fourier_upsample(two).shape == (32, 2)


def test_ramification_lands_in_t_star(e1_family):
    res = integrate_path(ramification_path(e1_family.germ, 1e-3, 1e-3), e1_family, steps=16, halving=False)
    assert np.max(np.abs(res.phi_final - np.array([-1e-3, 0, -1e-3, 0]))) < 1e-6
    assert fiber_classification(e1_family, res.phi_final).simple_branch


def test_exact_decomposition_under_shear(e1_family):
    order = e1_family.settings.truncation(e1_family.r)
    u = YPolySeries.from_terms([(0, 1, 1.0), (1, 0, 0.1)], order)
    dec = decompose_exact(u, u, e1_family)
    assert np.allclose(dec.c, [0, 0, 1, 0], atol=1e-8)
    assert dec.b.max_abs() < 1e-8
    assert dec.residual < 1e-8


def test_exact_decomposition_of_germ(e1_family):
    order = e1_family.settings.truncation(e1_family.r)
    dec = decompose_exact(e1_family.germ.ypoly(order), YPolySeries.y(order), e1_family)
    assert np.allclose(dec.c, 0, atol=1e-8)
    assert dec.b.max_abs() < 1e-8
    assert np.allclose(dec.a.values, 1, atol=1e-8)


def test_verify_pullback_checks_midpoints(e1_family, t_star):
    path = straight_line_path(e1_family, t_star)
    res = integrate_path(path, e1_family, steps=STEPS, halving=False)
    assert len(res.mid_samples) == STEPS
    assert [s for s, _, _ in res.mid_samples] == pytest.approx([(k + 0.5) / STEPS for k in range(STEPS)])
    corrupted = replace(res, mid_samples=[(s, t, u + np.array([1e-4, 0, 0])) for s, t, u in res.mid_samples])
    assert verify_pullback(path, corrupted, e1_family).residual > 1e-5
    unchecked = integrate_path(path, e1_family, steps=STEPS, certify=False, halving=False)
    assert unchecked.mid_samples is None


def test_linearization_agrees(e1_family):
    order = e1_family.settings.truncation(e1_family.r)
    terms = [(0, 3, 0, 1.0), (2, 0, 0, -1.0), (0, 0, 1, 0.3), (1, 0, 1, -0.1), (1, 1, 1, 0.2), (2, 2, 1, 1.0)]
    path = DeformationPath.from_terms(terms, e1_family.germ)
    want = [0.3, -0.1, 0, 0.2]
    c, _ = vector_field(path, 0.0, (np.zeros(4, dtype=complex), identity_u(64, 3)), e1_family)
    assert np.allclose(c, want, atol=1e-8)
    ds = path.ds_ypoly(order)
    assert np.allclose(decompose_exact(ds, YPolySeries.y(order), e1_family).c, want, atol=1e-8)
    assert np.allclose(basis_coordinates(e1_family.germ, e1_family.monomials, ds, order), want, atol=1e-8)
