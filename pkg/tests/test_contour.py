from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logic.contour import (cauchy_taylor, circle_nodes, companion_roots, contour_residue, lagrange_trace,
                           newton_coefficients, numeric_weierstrass_prepare, roots_on_circle)
from logic.errors import AliasingDetected, ContourTooClose, InputError, RootCountMismatch


def sqrt_x(x):
    return np.stack([-x, 0 * x, 1 + 0 * x], axis=-1)


def cusp(x):
    return np.stack([-x ** 2, 0 * x, 0 * x, 1 + 0 * x], axis=-1)


def test_square_root_sheets():
    samples = roots_on_circle(sqrt_x, 1.0, 8)
    assert samples.d == 2 and samples.nodes == 8
    assert np.allclose(samples.sheets.sum(axis=1), 0, atol=1e-13)
    assert np.allclose(samples.sheets ** 2, samples.x_nodes[:, None], atol=1e-13)


def test_cusp_vieta():
    samples = roots_on_circle(cusp, 0.75, 64)
    assert np.allclose(np.prod(samples.sheets, axis=1), samples.x_nodes ** 2, atol=1e-12)
    assert samples.residual < 1e-12
    assert samples.min_separation() > 0.1


def test_sheets_move_continuously():
    samples = roots_on_circle(cusp, 0.75, 64)
    steps = np.abs(np.diff(samples.sheets, axis=0))
    assert steps.max() < 0.2


def test_contour_through_branch_point():
    with pytest.raises(ContourTooClose):
        roots_on_circle(lambda x: np.stack([0.75 - x, 0 * x, 1 + 0 * x], axis=-1), 0.75, 8)


def test_companion_roots():
    roots = companion_roots(np.array([[2.0, -3.0, 1.0]]))
    assert sorted(roots[0].real) == pytest.approx([1, 2])


@pytest.mark.parametrize("fn, want", [
    (lambda x: 1 / x, 1),
    (lambda x: np.ones_like(x), 0),
    (lambda x: 1 / x + 3 / x ** 2, 1),
])
def test_contour_residue(fn, want):
    x = circle_nodes(0.5, 32)
    assert contour_residue(fn(x), 0.5) == pytest.approx(want, abs=1e-14)


def test_residue_per_column():
    x = circle_nodes(1.0, 16)
    values = np.stack([1 / x, 2 / x], axis=-1)
    assert np.allclose(contour_residue(values, 1.0), [1, 2])


def test_cauchy_geometric():
    x = circle_nodes(0.5, 64)
    series = cauchy_taylor(1 / (1 - x), 0.5, 16)
    assert np.allclose(series.dense(0, 16), 1, atol=1e-10)


def test_cauchy_monomial_and_exp():
    x = circle_nodes(0.5, 32)
    assert np.allclose(cauchy_taylor(x ** 2, 0.5, 8).dense(0, 8), [0, 0, 1, 0, 0, 0, 0, 0], atol=1e-14)
    want = [1 / factorial(j) for j in range(8)]
    assert np.allclose(cauchy_taylor(np.exp(x), 0.5, 8).dense(0, 8), want, atol=1e-10)


def test_cauchy_aliasing_and_node_count():
    x = circle_nodes(0.5, 16)
    with pytest.raises(AliasingDetected):
        cauchy_taylor(1 / (1 - x / 0.6), 0.5, 8)
    with pytest.raises(InputError):
        cauchy_taylor(np.ones(16), 0.5, 9)
    assert cauchy_taylor(np.zeros(16), 0.5, 8).is_zero()


@settings(max_examples=50, deadline=None)
@given(d=st.integers(min_value=1, max_value=6), seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_lagrange_trace_identities(d, seed):
    rng = np.random.default_rng(seed)
    roots = np.exp(2j * np.pi * (np.arange(d) + 0.3 * rng.random(d)) / d) * (1 + 0.2 * rng.random(d))
    for n in range(d):
        assert abs(lagrange_trace(roots, roots ** n) - (1.0 if n == d - 1 else 0.0)) < 1e-10


def test_newton_coefficients():
    assert np.allclose(newton_coefficients([3, 5]), [2, -3, 1])
    roots = np.array([0.5, -1j, 2.0])
    sums = [np.sum(roots ** k) for k in range(1, 4)]
    assert np.allclose(newton_coefficients(sums), np.poly(roots)[::-1])


def test_prepare_keeps_weierstrass_polynomial():
    x = np.array([0.5, 0.5j, -0.3])
    out = numeric_weierstrass_prepare(cusp, x, 1.5, 3)
    assert np.allclose(out, cusp(x), atol=1e-10)


def test_prepare_drops_far_factor():
    def factored(x):
        return np.stack([5 * x, -x, -5 + 0 * x, 1 + 0 * x], axis=-1)

    x = np.array([0.3, 0.5j])
    out = numeric_weierstrass_prepare(factored, x, 1.0, 2)
    assert np.allclose(out, sqrt_x(x), atol=1e-9)


def test_prepare_counts_roots():
    with pytest.raises(RootCountMismatch):
        numeric_weierstrass_prepare(cusp, np.array([0.5]), 1.5, 2)
    with pytest.raises((RootCountMismatch, ContourTooClose)):
        numeric_weierstrass_prepare(lambda x: np.stack([-1 + 0 * x, 0 * x, 1 + 0 * x], axis=-1),
                                    np.array([0.1]), 1.0, 2)


def test_prepare_ignores_units():
    def with_unit(x):
        c = cusp(x)
        out = np.zeros(c.shape[:-1] + (5,), dtype=complex)
        out[..., :4] = c * (1 + 0.1 * x)[..., None]
        out[..., 1:] += 0.2 * c
        return out

    x = np.array([0.5, 0.5j, -0.3])
    assert np.allclose(numeric_weierstrass_prepare(with_unit, x, 1.5, 3), cusp(x), atol=1e-9)
