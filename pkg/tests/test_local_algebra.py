import numpy as np
import pytest

from logic.errors import OutOfDomain, RankDeficient, TruncationUnstable
from logic.germ import normalize_germ
from logic.local_algebra import (B_matrix, analyze_quotient, basis_coordinates, char_poly_series,
                                 contour_pairing_matrix, fy_inverse_mod_f, jet_dimension, monomial_basis, mult_matrix,
                                 quotient_coordinates, residue_pairing, smith_over_series, smith_solve,
                                 trace_coefficient)
from logic.series import TruncSeries, YPolySeries, ypoly_reduce

ORDER = 12


def _f(terms, order=ORDER):
    return YPolySeries.from_terms(terms, order)


E1 = [(0, 3, 1.0), (2, 0, -1.0)]


def test_mult_matrix_of_fy():
    f = _f(E1)
    m = mult_matrix(f, f.dy())
    assert m[2][0].coeff(0) == pytest.approx(3)
    assert m[0][1].coeff(2) == pytest.approx(3)
    assert m[1][2].coeff(2) == pytest.approx(3)
    nonzero = {(j, k) for j in range(3) for k in range(3) if not m[j][k].is_zero(1e-12)}
    assert nonzero == {(2, 0), (0, 1), (1, 2)}


def test_mult_matrix_of_constants():
    f = _f(E1)
    one = mult_matrix(f, YPolySeries.constant(TruncSeries.one(ORDER)))
    zero = mult_matrix(f, YPolySeries.constant(TruncSeries.zero(ORDER)))
    for j in range(3):
        for k in range(3):
            assert one[j][k].coeff(0) == (1 if j == k else 0)
            assert zero[j][k].is_zero()


def test_smith_orders():
    f = _f(E1)
    assert smith_over_series(mult_matrix(f, f.dy())).orders == (0, 2, 2)
    diag = [[TruncSeries.monomial(1, ORDER), TruncSeries.zero(ORDER)],
            [TruncSeries.zero(ORDER), TruncSeries.monomial(3, ORDER)]]
    assert smith_over_series(diag).orders == (1, 3)
    eye = [[TruncSeries.one(ORDER) if i == j else TruncSeries.zero(ORDER) for j in range(3)] for i in range(3)]
    assert smith_over_series(eye).orders == (0, 0, 0)


def test_smith_rank_deficient():
    zero = [[TruncSeries.zero(ORDER)] * 2 for _ in range(2)]
    with pytest.raises(RankDeficient):
        smith_over_series(zero)


def test_smith_solve_diagonal():
    diag = [[TruncSeries.monomial(1, ORDER), TruncSeries.zero(ORDER)],
            [TruncSeries.zero(ORDER), TruncSeries.monomial(3, ORDER)]]
    q = smith_solve(smith_over_series(diag), [TruncSeries.one(ORDER), TruncSeries.one(ORDER)])
    assert q[0].coeff(-1) == pytest.approx(1)
    assert q[1].coeff(-3) == pytest.approx(1)


@pytest.mark.parametrize("terms, names", [
    (E1, [(0, 0), (1, 0), (0, 1), (1, 1)]),
    ([(0, 2, 1.0), (3, 0, -1.0)], [(0, 0), (1, 0), (2, 0)]),
    ([(0, 2, 1.0), (1, 0, -1.0)], [(0, 0)]),
])
def test_monomial_basis(terms, names):
    assert monomial_basis(_f(terms), ORDER) == names


def test_jet_dimension():
    f = _f(E1)
    assert jet_dimension(f, ORDER) == 4
    assert jet_dimension(f, ORDER, phi=YPolySeries.constant(TruncSeries.one(ORDER))) == 0


def test_fy_inverse_square_root():
    q = fy_inverse_mod_f(_f([(0, 2, 1.0), (1, 0, -1.0)]), ORDER)
    assert q.coeff(1).coeff(-1) == pytest.approx(0.5)
    assert q.coeff(0).is_zero(1e-12)


def test_fy_inverse_e1():
    f = _f(E1)
    q = fy_inverse_mod_f(f, ORDER)
    one = ypoly_reduce(f.dy() * q, f)
    assert one.coeff(0).coeff(0) == pytest.approx(1)
    assert one.coeff(1).is_zero(1e-10) and one.coeff(2).is_zero(1e-10)


def test_trace_coefficient():
    f = _f(E1)
    assert trace_coefficient(YPolySeries.monomial(0, 2, ORDER), f).coeff(0) == pytest.approx(1)
    assert trace_coefficient(YPolySeries.monomial(0, 1, ORDER), f).is_zero()
    phi = YPolySeries.monomial(0, 2, ORDER, 5.0) + 3.0
    assert trace_coefficient(phi, f).coeff(0) == pytest.approx(5)


def test_pairing_of_one_with_one():
    f = _f([(0, 2, 1.0), (1, 0, -1.0)])
    one = YPolySeries.monomial(0, 0, ORDER)
    assert residue_pairing(one, one, f) == pytest.approx(0.5)


def test_dual_basis_of_square_root():
    data = analyze_quotient(normalize_germ([(0, 2, 1.0), (1, 0, -1.0)]))
    assert data.basis_names == ["1"]
    assert data.dual_coeffs[0, 0] == pytest.approx(2)


def test_rigid_germ_has_empty_dual_basis():
    data = analyze_quotient(normalize_germ([(0, 1, 1.0), (2, 0, -1.0)]))
    assert data.r == 0
    assert data.dual_coeffs.shape == (0, 0)
    assert data.certificate() == 0.0


def test_e1_certificate(e1_family):
    assert e1_family.quotient.certificate() < 1e-10
    assert e1_family.quotient.divisor_orders == (0, 2, 2)


def test_quotient_coordinates_of_ideal_elements():
    f = _f(E1)
    sf = smith_over_series(mult_matrix(f, f.dy()))
    assert np.allclose(quotient_coordinates(sf, f, YPolySeries.monomial(2, 0, ORDER)), 0)
    assert np.allclose(quotient_coordinates(sf, f, f.dy()), 0)
    assert np.count_nonzero(np.abs(quotient_coordinates(sf, f, YPolySeries.monomial(1, 1, ORDER))) > 1e-9) == 1


def test_char_poly_of_y_is_f():
    f = _f(E1)
    chi = char_poly_series(mult_matrix(f, YPolySeries.y(ORDER)))
    assert chi.max_abs_diff(f) < 1e-12


def test_B_at_zero_is_identity(corpus_families):
    for fam in corpus_families.values():
        assert np.allclose(B_matrix(fam, np.zeros(fam.r)), np.eye(fam.r), atol=1e-10)


def test_contour_pairing_matches_exact(corpus_families):
    fam = corpus_families["y^4 - x^3"]
    numeric = contour_pairing_matrix(fam.coeff_fn(None), fam.monomials, fam.contour_radius, 64)
    assert np.allclose(numeric, fam.quotient.pairing_matrix_at_0, atol=1e-8)


def test_B_is_continuous(e1_family):
    b = B_matrix(e1_family, [0.001, 0, 0, 0])
    assert np.linalg.norm(b - np.eye(4), 2) < 0.1
    assert np.allclose(b, B_matrix(e1_family, [0.001, 0, 0, 0], nodes=128), atol=1e-9)


def test_B_with_branch_point_on_contour(corpus_families):
    fam = corpus_families["y^2 - x"]
    with pytest.raises(OutOfDomain):
        B_matrix(fam, [fam.contour_radius])


def test_pairing_checks_truncation(monkeypatch):
    f = _f([(0, 2, 1.0), (1, 0, -1.0)])
    one = YPolySeries.monomial(0, 0, ORDER)
    monkeypatch.setattr("logic.local_algebra._pairing_at", lambda g, h, f, n, q=None: float(n))
    with pytest.raises(TruncationUnstable):
        residue_pairing(one, one, f)
    assert residue_pairing(one, one, f, check=False) == ORDER


def test_basis_coordinates(e1_germ):
    monomials = [(0, 0), (1, 0), (0, 1), (1, 1)]
    for i, (a, b) in enumerate(monomials):
        c = basis_coordinates(e1_germ, monomials, YPolySeries.monomial(a, b, ORDER), ORDER)
        assert np.allclose(c, np.eye(4)[i], atol=1e-9)
    assert np.allclose(basis_coordinates(e1_germ, monomials, YPolySeries.monomial(2, 2, ORDER), ORDER), 0, atol=1e-9)
