"""Classifying maps into the universal base.

A one-parameter family F(x, y, s) with F(x, y, 0) = f is written as
H * G(x, u(x, y, s), phi(s)).  phi and u are found by integrating
dphi/ds = c, du/ds = b where H^-1 dF/ds = a G(u) + b G_u(u) + c.g(u).
On the curve H = F_y / (G_u u_y), so only sheet values are needed.
"""
from dataclasses import dataclass, field
from math import comb

import numpy as np

from logic.config import get_logger
from logic.contour import (cauchy_taylor, circle_nodes, contour_residue, horner, numeric_weierstrass_prepare,
                           roots_on_circle, sheet_separation)
from logic.errors import (AliasingDetected, InputError, OutOfDomain, RigidGerm, SheetCollision, SingularSheet,
                          ToleranceExceeded)
from logic.family import family_poly
from logic.germ import poly_dy, poly_y_coeffs
from logic.io_json import clist
from logic.local_algebra import (char_poly_series, fy_inverse_mod_f, mult_matrix, residue_pairing,
                                 smith_over_series, smith_solve)
from logic.series import BiGrid, TruncSeries, YPolySeries, stable_at, subst_invert, ypoly_reduce, ypoly_subst

logger = get_logger(__name__)

SINGULAR_SHEET_TOL = 1e-10
BASE_TOL = 1e-12
RESTART_NOISE = 1e-8


def _pad(coeffs, width):
    if coeffs.shape[-1] >= width:
        return coeffs
    out = np.zeros(coeffs.shape[:-1] + (width,), dtype=complex)
    out[..., :coeffs.shape[-1]] = coeffs
    return out


def taylor_shift(coeffs, w):
    """y-coefficients of p(y + w) from those of p, per node (w has one value per row)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    w = np.asarray(w, dtype=complex).reshape(-1, 1)
    n = coeffs.shape[1]
    out = np.zeros_like(coeffs)
    for m in range(n):
        for j in range(m, n):
            out[:, m] += comb(j, m) * coeffs[:, j] * w[:, 0] ** (j - m)
    return out


@dataclass(frozen=True)
class DeformationPath:
    """F(x, y, s) through its y-coefficients (low -> high) on arrays of x."""
    coeff_fn: object
    ds_fn: object
    d: int
    s_max: float = 1.0
    label: str = "path"
    terms: np.ndarray = None

    def evaluate(self, x, y, s):
        return horner(self.coeff_fn(x, s), y)[0]

    def evaluate_dy(self, x, y, s):
        return horner(self.coeff_fn(x, s), y)[1]

    def evaluate_ds(self, x, y, s):
        return horner(self.ds_fn(x, s), y)[0]

    @classmethod
    def from_terms(cls, terms, germ, s_max=1.0, label="terms"):
        """``terms`` are (a, b, k, coefficient): coefficient * x^a y^b s^k, in the germ's input coordinates."""
        terms = list(terms)
        if not terms:
            raise InputError("a deformation path needs at least one term")
        shape = tuple(max(int(t[i]) for t in terms) + 1 for i in range(3))
        poly = np.zeros(shape, dtype=complex)
        for a, b, k, c in terms:
            if min(a, b, k) < 0:
                raise InputError(f"negative exponent in term x^{a} y^{b} s^{k}")
            poly[int(a), int(b), int(k)] += complex(c) * germ.x_scale ** int(a)
        top = poly.shape[1] - 1
        lead = poly[0, top, 0]
        if abs(lead) <= BASE_TOL:
            raise InputError("F(x, y, 0) must have a nonzero constant top y-coefficient")
        poly = poly / lead
        deriv = poly[:, :, 1:] * np.arange(1, shape[2]) if shape[2] > 1 else np.zeros_like(poly)

        def coeff_fn(x, s):
            return sum(poly_y_coeffs(poly[:, :, k], x) * s ** k for k in range(shape[2]))

        def ds_fn(x, s):
            return sum(poly_y_coeffs(deriv[:, :, k], x) * s ** k for k in range(deriv.shape[2]))

        return cls(coeff_fn=coeff_fn, ds_fn=ds_fn, d=germ.d, s_max=s_max, label=label, terms=poly)

    @classmethod
    def pullback(cls, fam, phi, dphi, shear=None, s_max=1.0, label="pullback"):
        """F(x, y, s) = G(x, y + alpha(s) x, phi(s)); ``shear`` is the pair (alpha, dalpha)."""
        alpha, dalpha = shear if shear is not None else (lambda s: 0.0, lambda s: 0.0)
        zero = np.zeros(fam.r, dtype=complex)

        def coeff_fn(x, s):
            x = np.atleast_1d(x)
            return taylor_shift(poly_y_coeffs(fam.poly_at(phi(s)), x), alpha(s) * x)

        def ds_fn(x, s):
            x = np.atleast_1d(x)
            gy = _pad(poly_y_coeffs(poly_dy(fam.poly_at(phi(s))), x), fam.d + 1)
            gt = _pad(poly_y_coeffs(family_poly(np.zeros_like(fam.germ.poly), fam.monomials,
                                                zero + dphi(s)), x), fam.d + 1)
            return taylor_shift(dalpha(s) * x[:, None] * gy + gt, alpha(s) * x)

        return cls(coeff_fn=coeff_fn, ds_fn=ds_fn, d=fam.d, s_max=s_max, label=label)

    @classmethod
    def from_callables(cls, coeff_fn, ds_fn, d, s_max=1.0, label="callable"):
        return cls(coeff_fn=coeff_fn, ds_fn=ds_fn, d=d, s_max=s_max, label=label)

    def reparameterized(self, sigma, dsigma, s_max=None):
        """F(x, y, sigma(s))."""
        return DeformationPath(coeff_fn=lambda x, s: self.coeff_fn(x, sigma(s)),
                               ds_fn=lambda x, s: dsigma(s) * self.ds_fn(x, sigma(s)),
                               d=self.d, s_max=self.s_max if s_max is None else s_max,
                               label=f"{self.label} reparameterized")

    def ds_ypoly(self, order, s=0):
        """dF/ds at s as a y-polynomial over series (term paths only)."""
        if self.terms is None:
            raise InputError("dF/ds as a series needs a path given by terms")
        poly = self.terms
        arr = sum(k * poly[:, :, k] * s ** (k - 1) for k in range(1, poly.shape[2]))
        if np.isscalar(arr):
            arr = np.zeros(poly.shape[:2], dtype=complex)
        return YPolySeries.from_array(arr, order)

    def check_base(self, fam, nodes=64):
        """F(x, y, 0) (prepared when its y-degree exceeds d) must be f."""
        x = circle_nodes(fam.contour_radius, nodes)
        base = np.asarray(self.coeff_fn(x, 0.0), dtype=complex)
        if base.shape[1] - 1 > fam.d:
            base = numeric_weierstrass_prepare(lambda xx: self.coeff_fn(xx, 0.0), x, fam.germ.delta2, fam.d)
        else:
            base = base / base[:, -1:]
        want = fam.germ.y_coeffs(x)
        diff = float(np.max(np.abs(_pad(base, want.shape[1]) - _pad(want, base.shape[1]))))
        if diff > 1e-9 * max(1.0, float(np.max(np.abs(want)))):
            raise InputError(f"F(x, y, 0) differs from the germ by {diff:.3g}")


def straight_line_path(fam, t_star, s_max=1.0):
    t_star = np.asarray(t_star, dtype=complex)
    return DeformationPath.pullback(fam, lambda s: s * t_star, lambda s: t_star, s_max=s_max, label="straight line")


def shear_path(fam, t_star, eps, s_max=1.0):
    """G(x, y + s eps x, s t*): the classifying data is phi = s t*, u = y + s eps x."""
    t_star = np.asarray(t_star, dtype=complex)
    return DeformationPath.pullback(fam, lambda s: s * t_star, lambda s: t_star,
                                    shear=(lambda s: s * eps, lambda s: eps), s_max=s_max, label="shear")


def sinusoidal_path(fam, t_star, freq=4.0, s_max=1.0):
    """phi(s) = sin(freq s)/freq t*, which no fixed-step RK4 integrates exactly."""
    t_star = np.asarray(t_star, dtype=complex)
    return DeformationPath.pullback(fam, lambda s: np.sin(freq * s) / freq * t_star,
                                    lambda s: np.cos(freq * s) * t_star, s_max=s_max, label="sinusoidal")


def ramification_path(germ, s0, s1, s_max=1.0):
    """f - s (s0 + s1 y): the two-parameter perturbation that splits higher ramification."""
    terms = [(a, b, 0, c) for a, b, c in germ.terms]
    terms += [(0, 0, 1, -s0), (0, 1, 1, -s1)]
    scale = germ.x_scale
    # germ.terms are rescaled already and from_terms applies x_scale again
    terms = [(a, b, k, c / scale ** a) for a, b, k, c in terms]
    return DeformationPath.from_terms(terms, germ, s_max=s_max, label="ramification")


@dataclass(frozen=True)
class Decomposition:
    a: BiGrid
    b: YPolySeries
    c: np.ndarray
    residual: float
    weierstrass_factor: YPolySeries = None

    def to_json(self):
        return {"c": clist(self.c), "residual": self.residual,
                "b": [clist(s.dense(0, s.order)) if s.order > 0 else [] for s in self.b.coeffs]}


def _evaluate_u(ucoeffs, y):
    return horner(ucoeffs, y)


def decompose_exact(h, u, fam, order=None, grid_nodes=64):
    """(a, b, c) with h = a G(u) + b G_u(u) + c.g(u) at t = 0, at jet level."""
    germ = fam.germ
    order = order or fam.settings.truncation(fam.r)
    d = germ.d

    def coordinates(n):
        v = subst_invert(u.truncate(n))
        f = germ.ypoly(n)
        h_tilde = ypoly_reduce(ypoly_subst(h.truncate(n), v), f)
        q = fy_inverse_mod_f(f, n)
        return np.array([residue_pairing(h_tilde, hj.truncate(n), f, n, q, check=False) for hj in fam.dual_h])

    c = stable_at(coordinates, order) if fam.r else np.zeros(0, dtype=complex)
    f = germ.ypoly(order)
    v = subst_invert(u)
    h_tilde = ypoly_reduce(ypoly_subst(h, v), f)
    combo = YPolySeries((TruncSeries.zero(order),))
    for ci, g in zip(c, fam.basis_g):
        combo = combo + g * complex(ci)
    q = fy_inverse_mod_f(f, order)
    b_tilde = ypoly_reduce((h_tilde - combo) * q, f).padded(d)
    powers = [ypoly_reduce(ypoly_subst(YPolySeries.monomial(0, k, order), v), f).padded(d) for k in range(d)]
    w = [[powers[k].coeffs[j] for k in range(d)] for j in range(d)]
    b = YPolySeries(smith_solve(smith_over_series(w), list(b_tilde.coeffs[:d])))
    b = YPolySeries(s.normalized() if s.valuation < 0 else s for s in b.coeffs)
    weierstrass = char_poly_series(mult_matrix(f, ypoly_reduce(v, f).padded(d), order))

    g_u = ypoly_subst(f.dy(), u)
    g_sum = YPolySeries((TruncSeries.zero(order),))
    for ci, g in zip(c, fam.basis_g):
        g_sum = g_sum + ypoly_subst(g, u) * complex(ci)
    rest = h - b * g_u - g_sum
    residual = ypoly_reduce(rest, weierstrass).max_abs()

    rho = fam.contour_radius
    xs = circle_nodes(rho, grid_nodes)[:, None]
    ys = circle_nodes(0.9 * germ.delta2, grid_nodes)[None, :]
    values = rest.evaluate(xs, ys) / germ.evaluate(xs, u.evaluate(xs, ys))
    grid = BiGrid(radius_x=rho, nodes=grid_nodes, values=values, radius_y=0.9 * germ.delta2)
    logger.debug(f"exact decomposition: c = {np.round(c, 12)}, residual {residual:.2e}")
    return Decomposition(a=grid, b=b, c=c, residual=residual, weierstrass_factor=weierstrass)


@dataclass(frozen=True)
class NumericDecomposition:
    c: np.ndarray
    b: np.ndarray
    u_tilde: np.ndarray
    residual: float

    def b_series(self, radius, n):
        return [cauchy_taylor(self.b[:, k], radius, n) for k in range(self.b.shape[1])]


def decompose_numeric(fam, t, x, y, h, ucoeffs, settings=None):
    """c and node samples of b from sheet values h at the points y of V(F) over the nodes x."""
    settings = settings or fam.settings
    x = np.asarray(x, dtype=complex)
    xc = x[:, None]
    u_tilde = _evaluate_u(ucoeffs, y)[0]
    off = float(np.max(np.abs(fam.evaluate(xc, u_tilde, t))))
    if off > settings.verify_tol:
        raise OutOfDomain(f"transformed sheet points miss the fiber of G by {off:.3g}")
    if sheet_separation(y) < settings.sep_tol:
        raise SheetCollision("interpolation nodes coalesce on the contour")
    g_u = fam.evaluate_dy(xc, u_tilde, t)
    gv = fam.quotient.g_values(xc, u_tilde)
    hv = fam.quotient.h_values(xc, u_tilde)
    weight = 1.0 / g_u ** 2
    rho = abs(x[0])
    bmat = contour_residue(np.einsum("mki,mkj,mk->mij", gv, hv, weight), rho)
    rhs = contour_residue(np.einsum("mk,mkj,mk->mj", h, hv, weight), rho)
    c = np.linalg.solve(bmat, rhs)
    w = (h - gv @ c) / g_u
    vander = y[:, :, None] ** np.arange(y.shape[1])
    b = np.linalg.solve(vander, w[:, :, None])[:, :, 0]
    recon = horner(b, y)[0] * g_u + gv @ c
    residual = float(np.max(np.abs(h - recon)))
    return NumericDecomposition(c=c, b=b, u_tilde=u_tilde, residual=residual)


def path_sheets(path, s, radius, nodes, d, delta2, sep_tol):
    """The d innermost y-roots of F(x, ., s) over |x| = radius; all of them must stay below delta2."""
    samples = roots_on_circle(lambda xx: path.coeff_fn(xx, s), radius, nodes, sep_tol)
    y = samples.sheets
    if y.shape[1] > d:
        y = np.take_along_axis(y, np.argsort(np.abs(y), axis=1), axis=1)
        if np.any(np.abs(y[:, d]) < delta2):
            raise OutOfDomain(f"more than {d} roots of F inside |y| < {delta2:.4g} at s = {s:.4g}")
        y = y[:, :d]
    if np.any(np.abs(y) >= delta2):
        raise OutOfDomain(f"a sheet of F leaves |y| < {delta2:.4g} at s = {s:.4g}")
    return samples.x_nodes, y


def vector_field(path, s, state, fam, settings=None):
    """(dt/ds, du/ds) at s for state (t, u-coefficient samples)."""
    settings = settings or fam.settings
    t, ucoeffs = state
    x, y = path_sheets(path, s, fam.contour_radius, ucoeffs.shape[0], fam.d, fam.germ.delta2, settings.sep_tol)
    f_s = path.evaluate_ds(x, y, s)
    f_y = path.evaluate_dy(x, y, s)
    if np.min(np.abs(f_y)) < SINGULAR_SHEET_TOL:
        raise SingularSheet(f"dF/dy vanishes at a sheet point at s = {s:.4g}")
    u_tilde, u_y = _evaluate_u(ucoeffs, y)
    g_u = fam.evaluate_dy(x[:, None], u_tilde, t)
    h = f_s * g_u * u_y / f_y
    dec = decompose_numeric(fam, t, x, y, h, ucoeffs, settings)
    return dec.c, dec.b


def _initial_u(nodes, d):
    u = np.zeros((nodes, d), dtype=complex)
    u[:, 1] = 1.0
    return u


def _rk4(path, fam, steps, settings, u0):
    """Fixed-step RK4; returns the states at the step ends and the slopes at the step starts."""
    h = path.s_max / steps
    t = np.zeros(fam.r, dtype=complex)
    u = u0.copy()
    phi = [(0.0, t.copy())]
    us = [u.copy()]
    slopes = []
    for k in range(steps):
        s = k * h
        k1 = vector_field(path, s, (t, u), fam, settings)
        k2 = vector_field(path, s + h / 2, (t + h / 2 * k1[0], u + h / 2 * k1[1]), fam, settings)
        k3 = vector_field(path, s + h / 2, (t + h / 2 * k2[0], u + h / 2 * k2[1]), fam, settings)
        k4 = vector_field(path, s + h, (t + h * k3[0], u + h * k3[1]), fam, settings)
        t = t + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        u = u + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        phi.append(((k + 1) * h, t.copy()))
        us.append(u.copy())
        slopes.append(k1)
    return phi, us, slopes


def _midpoints(path, fam, settings, phi, us, slopes):
    """Cubic Hermite states (s, t, u) halfway through each step."""
    h = path.s_max / (len(phi) - 1)
    slopes = slopes + [vector_field(path, path.s_max, (phi[-1][1], us[-1]), fam, settings)]
    mids = []
    for k in range(len(phi) - 1):
        (s0, t0), (_, t1) = phi[k], phi[k + 1]
        (c0, b0), (c1, b1) = slopes[k], slopes[k + 1]
        mids.append((s0 + h / 2, (t0 + t1) / 2 + h / 8 * (c0 - c1), (us[k] + us[k + 1]) / 2 + h / 8 * (b0 - b1)))
    return mids


def on_curve_residual(path, fam, s, t, ucoeffs, settings):
    x, y = path_sheets(path, s, fam.contour_radius, ucoeffs.shape[0], fam.d, fam.germ.delta2, settings.sep_tol)
    u_tilde = _evaluate_u(ucoeffs, y)[0]
    return float(np.max(np.abs(fam.evaluate(x[:, None], u_tilde, t))))


@dataclass(frozen=True)
class ClassifyResult:
    phi_samples: list
    u_final: np.ndarray
    u_series: list
    residual: float
    steps: int
    nodes: int
    tolerance: float
    basis: list
    halving_diff: float = None
    u_samples: list = field(default=None, repr=False)
    mid_samples: list = field(default=None, repr=False)
    notes: tuple = ()

    @property
    def phi_final(self):
        return self.phi_samples[-1][1]

    def to_json(self):
        return {
            "basis": self.basis,
            "phi": [{"s": s, "t": clist(t)} for s, t in self.phi_samples],
            "phi_final": clist(self.phi_final),
            "u_final": [clist(s.dense(0, s.order)) for s in self.u_series],
            "residual": self.residual,
            "tolerance": self.tolerance,
            "steps": self.steps,
            "nodes": self.nodes,
            "halving_diff": self.halving_diff,
            "notes": list(self.notes),
        }


def _u_series(ucoeffs, fam, settings, notes):
    n = min(settings.truncation(fam.r), settings.nodes // 2)
    try:
        return [cauchy_taylor(ucoeffs[:, k], fam.contour_radius, n) for k in range(fam.d)]
    except AliasingDetected as e:
        notes.append(f"u Taylor coefficients not resolved at order {n}: {e.message}")
        logger.warning(notes[-1])
        return [cauchy_taylor(ucoeffs[:, k], fam.contour_radius, n, floor=np.inf) for k in range(fam.d)]


def integrate_path(path, fam, steps=None, settings=None, u0=None, certify=True, halving=True):
    """RK4 in s for (phi, u) with an on-curve residual certificate at s_max."""
    settings = settings or fam.settings
    if fam.r == 0:
        raise RigidGerm("a germ without deformation parameters has nothing to classify")
    steps = steps or settings.steps
    path.check_base(fam)
    u0 = _initial_u(settings.nodes, fam.d) if u0 is None else np.asarray(u0, dtype=complex)
    phi, us, slopes = _rk4(path, fam, steps, settings, u0)
    residual = on_curve_residual(path, fam, path.s_max, phi[-1][1], us[-1], settings)
    if certify and residual > settings.residual_tol:
        raise ToleranceExceeded(f"on-curve residual {residual:.3g} exceeds {settings.residual_tol:.1e}")
    notes = []
    halving_diff = None
    if halving:
        fine, _, _ = _rk4(path, fam, 2 * steps, settings, u0)
        halving_diff = float(np.max(np.abs(fine[-1][1] - phi[-1][1]), initial=0.0))
        if halving_diff > 10 * settings.residual_tol:
            notes.append(f"step halving moved phi(s_max) by {halving_diff:.3g}")
            logger.warning(notes[-1])
    mids = _midpoints(path, fam, settings, phi, us, slopes) if certify else None
    u_series = _u_series(us[-1], fam, settings, notes)
    logger.info(f"OK: classified {path.label} in {steps} steps, residual {residual:.2e}")
    return ClassifyResult(phi_samples=phi, u_final=us[-1], u_series=u_series, residual=residual, steps=steps,
                          nodes=settings.nodes, tolerance=settings.residual_tol, basis=fam.basis_names,
                          halving_diff=halving_diff, u_samples=us, mid_samples=mids, notes=tuple(notes))


def fourier_upsample(samples, factor=2):
    """Values at factor*M nodes of the function holomorphic in |x| <= rho sampled at M nodes."""
    samples = np.asarray(samples, dtype=complex)
    m = samples.shape[0]
    coeffs = np.fft.fft(samples, axis=0) / m
    padded = np.zeros((factor * m,) + samples.shape[1:], dtype=complex)
    padded[:m] = coeffs
    return np.fft.ifft(padded, axis=0) * (factor * m)


@dataclass(frozen=True)
class PullbackCheck:
    residual: float
    unit_deviation: float

    def to_json(self):
        return {"residual": self.residual, "unit_deviation_at_0": self.unit_deviation}


def verify_pullback(path, result, fam, settings=None):
    """On-curve residual of F = H G(u, phi) on a doubled x-grid, at step ends and midpoints; |H - 1| at s = 0.

    Results integrated without a certificate carry no midpoint states; only their step ends are checked.
    """
    settings = settings or fam.settings
    samples = result.u_samples or [result.u_final]
    states = [(s, t, u) for (s, t), u in zip(result.phi_samples[-len(samples):], samples)]
    states += list(result.mid_samples or ())
    worst = 0.0
    for s, t, u in sorted(states, key=lambda state: state[0]):
        worst = max(worst, on_curve_residual(path, fam, s, t, fourier_upsample(u), settings))
    u0 = fourier_upsample(samples[0])
    x, y = path_sheets(path, 0.0, fam.contour_radius, u0.shape[0], fam.d, fam.germ.delta2, settings.sep_tol)
    u_tilde, u_y = _evaluate_u(u0, y)
    unit = path.evaluate_dy(x, y, 0.0) / (fam.evaluate_dy(x[:, None], u_tilde, result.phi_samples[0][1]) * u_y)
    return PullbackCheck(residual=worst, unit_deviation=float(np.max(np.abs(unit - 1.0))))


def restart_sensitivity(path, fam, result=None, steps=None, settings=None, noise=RESTART_NOISE):
    """|phi(s_max) from a slightly perturbed initial u - phi(s_max)|."""
    settings = settings or fam.settings
    if result is None:
        result = integrate_path(path, fam, steps, settings, halving=False)
    rng = np.random.default_rng(settings.seed)
    u0 = _initial_u(settings.nodes, fam.d)
    x = circle_nodes(fam.contour_radius, settings.nodes)
    u0[:, 0] += noise * x * rng.standard_normal()
    again = integrate_path(path, fam, result.steps, settings, u0=u0, certify=False, halving=False)
    return float(np.max(np.abs(again.phi_final - result.phi_final), initial=0.0))


def classify_collection(coll, paths, steps=None, settings=None):
    """Classify each germ's path independently; phi lives in the product base."""
    if len(paths) != len(coll.families):
        raise InputError(f"{len(coll.families)} germs need as many paths, got {len(paths)}")
    results = [integrate_path(p, fam, steps, settings, halving=False) if fam.r else None
               for p, fam in zip(paths, coll.families)]
    phi = np.concatenate([r.phi_final for r in results if r is not None] + [np.zeros(0, dtype=complex)])
    return results, phi


if __name__ == "__main__":
    from logic.family import build_family
    from logic.germ import normalize_germ

    fam = build_family(normalize_germ([(0, 3, 1.0), (2, 0, -1.0)]))
    res = integrate_path(straight_line_path(fam, [0.002, 0, 0.001, 0]), fam, steps=8, halving=False)
    print(f"[OK] straight line: phi(1) = {np.round(res.phi_final, 10)}, residual {res.residual:.1e}")
