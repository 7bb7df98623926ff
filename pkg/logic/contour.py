"""Numerics on fibers over circles |x| = rho: roots per node, residues, Cauchy coefficients."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from logic.config import get_logger
from logic.errors import AliasingDetected, ContourTooClose, InputError, RootCountMismatch
from logic.series import TruncSeries

logger = get_logger(__name__)


def circle_nodes(radius, nodes):
    return radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)


def horner(coeffs, z):
    """Evaluate per-node polynomials (low -> high along the last axis of ``coeffs``) at z.

    ``coeffs`` has shape (M, D) and z shape (M, k); returns (value, derivative).
    """
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for j in range(coeffs.shape[-1] - 1, -1, -1):
        dp = dp * z + p
        p = p * z + coeffs[:, j:j + 1]
    return p, dp


@dataclass(frozen=True)
class SheetSamples:
    radius_x: float
    x_nodes: np.ndarray
    sheets: np.ndarray
    residual: float = 0.0

    @property
    def nodes(self):
        return self.x_nodes.size

    @property
    def d(self):
        return self.sheets.shape[1]

    def min_separation(self):
        return sheet_separation(self.sheets)


def sheet_separation(z):
    d = z.shape[1]
    if d < 2:
        return np.inf
    diff = np.abs(z[:, :, None] - z[:, None, :])
    diff[:, np.arange(d), np.arange(d)] = np.inf
    return float(diff.min())


def _aberth(coeffs, z, iterations=80):
    d = z.shape[1]
    eye = np.eye(d, dtype=bool)
    for _ in range(iterations):
        p, dp = horner(coeffs, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dp != 0, p / dp, 0)
            diff = z[:, :, None] - z[:, None, :]
            diff[:, eye] = np.inf
            s = np.sum(1.0 / diff, axis=2)
            delta = ratio / (1.0 - ratio * s)
        delta = np.where(np.isfinite(delta), delta, 0)
        z = z - delta
        if np.max(np.abs(delta), initial=0.0) <= 1e-15 * max(1.0, np.max(np.abs(z))):
            break
    return z


def companion_roots(coeffs):
    """Eigenvalues of the stacked companion matrices of monic rows (low -> high)."""
    m, d = coeffs.shape[0], coeffs.shape[1] - 1
    comp = np.zeros((m, d, d), dtype=complex)
    comp[:, np.arange(1, d), np.arange(d - 1)] = 1.0
    comp[:, :, d - 1] = -coeffs[:, :d]
    return np.linalg.eigvals(comp)


def _match_sheets(z):
    """Reorder roots node by node so each sheet moves continuously along the circle."""
    out = z.copy()
    for k in range(1, z.shape[0]):
        cost = np.abs(z[k][:, None] - out[k - 1][None, :])
        rows, cols = linear_sum_assignment(cost)
        out[k, cols] = z[k, rows]
    return out


def roots_on_circle(coeff_fn, radius, nodes, sep_tol=1e-6, seed=0):
    """All y-roots of a monic y-polynomial over the nodes of |x| = radius.

    ``coeff_fn`` maps an array of x values to y-coefficients of shape (len(x), d+1), low -> high.
    """
    x = circle_nodes(radius, nodes)
    coeffs = np.asarray(coeff_fn(x), dtype=complex)
    coeffs = coeffs / coeffs[:, -1:]
    d = coeffs.shape[1] - 1
    if d < 1:
        raise InputError("root finding needs a polynomial of degree >= 1")
    rng = np.random.default_rng(seed)
    start = companion_roots(coeffs)
    scale = max(1.0, float(np.max(np.abs(start), initial=0.0)))
    start = start + 1e-12 * scale * (rng.standard_normal(start.shape) + 1j * rng.standard_normal(start.shape))
    z = _aberth(coeffs, start)
    for _ in range(2):
        p, dp = horner(coeffs, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dp != 0, p / dp, 0)
        z = z - np.where(np.isfinite(step), step, 0)
    sep = sheet_separation(z)
    if sep < sep_tol:
        raise ContourTooClose(f"sheets come within {sep:.3g} of each other on |x| = {radius:.6g}")
    residual = float(np.max(np.abs(horner(coeffs, z)[0]), initial=0.0))
    logger.debug(f"roots on |x| = {radius:.4g}: {nodes} nodes, separation {sep:.3g}, residual {residual:.2e}")
    return SheetSamples(radius_x=float(radius), x_nodes=x, sheets=_match_sheets(z), residual=residual)


def contour_residue(node_values, radius):
    """(1/2 pi i) of the integral of f dx over |x| = radius from equispaced samples: mean of f(x_k) x_k."""
    values = np.asarray(node_values, dtype=complex)
    x = circle_nodes(radius, values.shape[0]).reshape((-1,) + (1,) * (values.ndim - 1))
    return np.mean(values * x, axis=0)


def cauchy_taylor(node_values, radius, n, floor=1e-12):
    """Taylor coefficients 0..n-1 of a function holomorphic on |x| <= radius from circle samples."""
    values = np.asarray(node_values, dtype=complex)
    m = values.shape[0]
    if n > m // 2:
        raise InputError(f"{n} coefficients need at least {2 * n} nodes, got {m}")
    scaled = np.fft.fft(values, axis=0) / m
    head = np.abs(scaled[:n])
    top = float(np.max(head, initial=0.0))
    if top > floor and head[n - 1] > 0.1 * top:
        raise AliasingDetected(f"coefficient {n - 1} still carries {head[n - 1] / top:.2g} of the peak")
    coeffs = scaled[:n] / radius ** np.arange(n)
    return TruncSeries.from_poly(coeffs, n)


def lagrange_trace(roots, values):
    """sum_i values_i / P'(y_i) for P = prod (y - y_i), along the last axis."""
    roots = np.asarray(roots, dtype=complex)
    d = roots.shape[-1]
    diff = roots[..., :, None] - roots[..., None, :]
    diff[..., np.arange(d), np.arange(d)] = 1.0
    return np.sum(np.asarray(values) / np.prod(diff, axis=-1), axis=-1)


def newton_coefficients(power_sums):
    """Monic coefficients (low -> high) from power sums p_1..p_d, along the last axis."""
    p = np.asarray(power_sums, dtype=complex)
    d = p.shape[-1]
    elem = [np.ones(p.shape[:-1], dtype=complex)]
    for k in range(1, d + 1):
        acc = sum(((-1) ** (i - 1)) * elem[k - i] * p[..., i - 1] for i in range(1, k + 1))
        elem.append(acc / k)
    coeffs = [((-1) ** (d - j)) * elem[d - j] for j in range(d)] + [elem[0]]
    return np.stack(coeffs, axis=-1)


def numeric_weierstrass_prepare(coeff_fn, x, radius_y, d, nodes_y=256):
    """Monic factor of degree d collecting the roots of P(x, .) inside |y| < radius_y, per x."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    coeffs = np.asarray(coeff_fn(x), dtype=complex)
    w = np.broadcast_to(circle_nodes(radius_y, nodes_y), (x.size, nodes_y))
    p, dp = horner(coeffs, w)
    size = np.max(np.abs(p), axis=1, keepdims=True)
    if np.any(np.abs(p) <= 1e-12 * size):
        raise ContourTooClose(f"a root of P lies on |y| = {radius_y:.6g}")
    log_deriv = dp / p
    winding = np.mean(w * log_deriv, axis=1)
    if np.any(np.abs(winding - d) > 0.25):
        bad = winding[np.argmax(np.abs(winding - d))]
        raise RootCountMismatch(f"{bad.real:.3f} roots inside |y| < {radius_y:.6g}, expected {d}")
    sums = np.stack([np.mean(w ** (n + 1) * log_deriv, axis=1) for n in range(1, d + 1)], axis=-1)
    return newton_coefficients(sums)


if __name__ == "__main__":
    samples = roots_on_circle(lambda x: np.stack([-x, 0 * x, 1 + 0 * x], axis=-1), 1.0, 8)
    print(f"[OK] y^2 - x on |x| = 1: sum of sheets {np.max(np.abs(samples.sheets.sum(axis=1))):.1e}")
