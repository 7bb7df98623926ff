"""Acceptance suite over the built-in germ corpus, run by ``germdeform.py check``."""
from dataclasses import dataclass, field

import numpy as np

from logic.classify import (DeformationPath, decompose_exact, decompose_numeric, integrate_path, ramification_path,
                            restart_sensitivity, shear_path, sinusoidal_path, straight_line_path, vector_field)
from logic.config import DEFAULTS, get_logger
from logic.contour import circle_nodes, lagrange_trace, roots_on_circle
from logic.errors import GermDeformError
from logic.family import (assemble_collection, branch_velocity, build_family, dis_map, disc_roots,
                          fiber_classification, multiplicity_conservation_check, reality_constrain,
                          symmetric_basis)
from logic.germ import normalize_germ
from logic.local_algebra import B_matrix, basis_coordinates, contour_pairing_matrix
from logic.series import YPolySeries

logger = get_logger(__name__)

CORPUS = {
    "y^2 - x": [(0, 2, 1.0), (1, 0, -1.0)],
    "y^2 - x^3": [(0, 2, 1.0), (3, 0, -1.0)],
    "y^3 - x^2": [(0, 3, 1.0), (2, 0, -1.0)],
    "y^3 - x^4": [(0, 3, 1.0), (4, 0, -1.0)],
    "y^4 - x^2": [(0, 4, 1.0), (2, 0, -1.0)],
    "y^4 - x^3": [(0, 4, 1.0), (3, 0, -1.0)],
}
E1 = "y^3 - x^2"
E1_BASIS = ["1", "x", "y", "x*y"]
T_STAR = np.array([0.002, 0, 0.001, 0], dtype=complex)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_json(self):
        return {"name": self.name, "passed": bool(self.passed), "value": self.value,
                "threshold": self.threshold, "detail": self.detail}


@dataclass
class CheckContext:
    settings: object = DEFAULTS
    _families: dict = field(default_factory=dict)

    def family(self, name):
        if name not in self._families:
            self._families[name] = build_family(normalize_germ(CORPUS[name]), self.settings)
        return self._families[name]

    def rng(self, index):
        return np.random.default_rng([self.settings.seed, index])


def _result(name, value, threshold, detail="", passed=None):
    value = float(value)
    if passed is None:
        passed = value < threshold
    return CheckResult(name=name, passed=bool(passed), value=value, threshold=threshold, detail=detail)


def check_e1_anchor(ctx, rng):
    fam = ctx.family(E1)
    ok = fam.d == 3 and fam.r == 4 and fam.basis_names == E1_BASIS
    return _result("e1_anchor", fam.r, 4, f"d = {fam.d}, r = {fam.r}, basis {fam.basis_names}", passed=ok)


def check_z3_equivariance(ctx, rng):
    fam = ctx.family(E1)
    q = np.exp(2j * np.pi / 3)
    rot = np.array([1, 1, q, q])
    radius = min(0.01, fam.param_box)
    worst = 0.0
    for _ in range(50):
        t = radius * np.sqrt(rng.random(4)) * np.exp(2j * np.pi * rng.random(4))
        worst = max(worst, float(np.max(np.abs(dis_map(fam, rot * t) - dis_map(fam, t)))))
    return _result("z3_equivariance", worst, 1e-8, "50 points, |t_i| <= " + f"{radius:.3g}")


def check_trace_identities(ctx, rng):
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 7))
        while True:
            roots = (0.5 + 0.5 * rng.random(d)) * np.exp(2j * np.pi * rng.random(d))
            diff = np.abs(roots[:, None] - roots[None, :]) + np.eye(d)
            if diff.min() > 0.2:
                break
        for n in range(d):
            want = 1.0 if n == d - 1 else 0.0
            worst = max(worst, abs(lagrange_trace(roots, roots ** n) - want))
    return _result("trace_identities", worst, 1e-10, "100 square-free polynomials of degree <= 6")


def check_pairing_cross_validation(ctx, rng):
    worst, where = 0.0, ""
    for name in CORPUS:
        fam = ctx.family(name)
        numeric = contour_pairing_matrix(fam.coeff_fn(None), fam.monomials, fam.contour_radius,
                                         ctx.settings.nodes, ctx.settings.sep_tol)
        err = float(np.max(np.abs(numeric - fam.quotient.pairing_matrix_at_0), initial=0.0))
        if err >= worst:
            worst, where = err, name
    return _result("pairing_cross_validation", worst, 1e-8, f"largest gap on {where}")


def check_dual_certificate(ctx, rng):
    worst = 0.0
    for name in CORPUS:
        fam = ctx.family(name)
        b0 = B_matrix(fam, np.zeros(fam.r))
        worst = max(worst, fam.quotient.certificate(), float(np.max(np.abs(b0 - np.eye(fam.r)), initial=0.0)))
    fam = ctx.family(E1)
    drift = 0.0
    for _ in range(20):
        t = 1e-3 * np.sqrt(rng.random(4)) * np.exp(2j * np.pi * rng.random(4))
        drift = max(drift, float(np.linalg.norm(B_matrix(fam, t) - np.eye(4), 2)))
    return _result("dual_certificate", worst, 1e-10, f"max |B(t) - I| = {drift:.3g} for |t| <= 1e-3",
                   passed=worst < 1e-10 and drift < 0.2)


def check_local_constancy(ctx, rng):
    failures = []
    for name in CORPUS:
        fam = ctx.family(name)
        for _ in range(100):
            t = fam.random_point(rng)
            try:
                ok = multiplicity_conservation_check(fam, t)
            except GermDeformError as e:
                ok = False
                logger.debug(f"{name} at {t.t}: {e.code}")
            if not ok:
                failures.append(name)
    detail = f"failures on {sorted(set(failures))}" if failures else "100 points per germ"
    return _result("local_constancy", len(failures), 1, detail)


def check_density(ctx, rng):
    fam = ctx.family(E1)
    hits = sum(fiber_classification(fam, fam.random_point(rng)).simple_branch for _ in range(200))
    share = hits / 200
    return _result("density", share, 0.95, f"{hits} of 200 fibers in T*", passed=share >= 0.95)


def _t_star_points(fam, rng, count, fraction=0.9, attempts=400):
    """T* points with every component of modulus fraction * box; dis flattens towards t = 0."""
    out = []
    for _ in range(attempts):
        t = fraction * fam.param_box * np.exp(2j * np.pi * rng.random(fam.r))
        if fiber_classification(fam, t).simple_branch:
            out.append(t)
            if len(out) == count:
                break
    return out


def _nearest(values, targets):
    return np.array([values[np.argmin(np.abs(values - z))] for z in targets])


def check_branch_rank(ctx, rng):
    fam = ctx.family(E1)
    h = 1e-6
    eye = np.eye(fam.r)
    smallest, velocity_gap = np.inf, 0.0
    points = _t_star_points(fam, rng, 20)
    for t in points:
        jac = np.column_stack([(dis_map(fam, t + h * e) - dis_map(fam, t - h * e)) / (2 * h) for e in eye])
        smallest = min(smallest, float(np.linalg.svd(jac, compute_uv=False)[-1]))
        t_dot = np.exp(2j * np.pi * rng.random(fam.r))
        xb, v = branch_velocity(fam, t, t_dot)
        plus = _nearest(disc_roots(fam.poly_at(t + h * t_dot))[0], xb)
        minus = _nearest(disc_roots(fam.poly_at(t - h * t_dot))[0], xb)
        gap = np.abs((plus - minus) / (2 * h) - v) / max(1.0, float(np.max(np.abs(v))))
        velocity_gap = max(velocity_gap, float(np.max(gap)))
    ok = len(points) == 20 and smallest > 1e-6 and velocity_gap < 1e-5
    return _result("branch_rank", smallest, 1e-6,
                   f"{len(points)} T* points, branch velocity gap {velocity_gap:.2e}", passed=ok)


def _random_h(rng, d, x, y):
    coeffs = rng.random((3, d)) * np.exp(2j * np.pi * rng.random((3, d)))
    return sum(coeffs[a, b] * x ** a * y ** b for a in range(3) for b in range(d))


def check_decomposition(ctx, rng):
    fam = ctx.family(E1)
    nodes = ctx.settings.nodes
    worst, drift = 0.0, 0.0
    for _ in range(50):
        t = fam.random_point(rng, 0.5).array
        seed = int(rng.integers(1 << 30))
        coeffs = []
        for m in (nodes, 2 * nodes):
            sheets = roots_on_circle(fam.coeff_fn(t), fam.contour_radius, m, ctx.settings.sep_tol)
            x = sheets.x_nodes
            u = np.zeros((m, fam.d), dtype=complex)
            u[:, 1] = 1.0
            h = _random_h(np.random.default_rng(seed), fam.d, x[:, None], sheets.sheets)
            dec = decompose_numeric(fam, t, x, sheets.sheets, h, u, ctx.settings)
            worst = max(worst, dec.residual)
            coeffs.append(dec.c)
        drift = max(drift, float(np.max(np.abs(coeffs[0] - coeffs[1]))))
    return _result("decomposition", max(worst, drift), 1e-9,
                   f"reconstruction {worst:.2e}, c under doubled nodes {drift:.2e}")


def check_classification(ctx, rng):
    fam = ctx.family(E1)
    settings = ctx.settings
    line = integrate_path(straight_line_path(fam, T_STAR), fam, steps=64, settings=settings, halving=False)
    err_line = float(np.max(np.abs(line.phi_final - T_STAR)))

    eps = 1e-3
    sheared = integrate_path(shear_path(fam, T_STAR, eps), fam, steps=64, settings=settings, halving=False)
    err_shear = float(np.max(np.abs(sheared.phi_final - T_STAR)))
    u_want = np.zeros_like(sheared.u_final)
    u_want[:, 0] = eps * circle_nodes(fam.contour_radius, u_want.shape[0])
    u_want[:, 1] = 1.0
    err_u = float(np.max(np.abs(sheared.u_final - u_want)))

    t_sin = 5 * T_STAR
    exact = np.sin(4.0) / 4.0 * t_sin
    errors = []
    for steps in (8, 16):
        res = integrate_path(sinusoidal_path(fam, t_sin), fam, steps=steps, settings=settings,
                             certify=False, halving=False)
        errors.append(float(np.max(np.abs(res.phi_final - exact))))
    ratio = errors[0] / max(errors[1], 1e-300)

    # x^2 y^2 lies in <f, f_y> but not in <f>
    bump = DeformationPath.from_terms([(0, 3, 0, 1.0), (2, 0, 0, -1.0), (2, 2, 1, 0.1)], fam.germ,
                                      label="x^2 y^2 bump")
    base = integrate_path(bump, fam, steps=64, settings=settings, halving=False)
    restart = restart_sensitivity(bump, fam, base, settings=settings)

    ok = err_line < 1e-6 and err_shear < 1e-6 and err_u < 1e-7 and ratio >= 8 and restart < 1e-6
    detail = (f"line {err_line:.2e}, shear phi {err_shear:.2e} u {err_u:.2e}, "
              f"halving ratio {ratio:.1f}, restart {restart:.2e}")
    return _result("classification", max(err_line, err_shear, restart), 1e-6, detail, passed=ok)


def check_linearization(ctx, rng):
    fam = ctx.family(E1)
    order = ctx.settings.truncation(fam.r)
    want = np.array([0.3, -0.1, 0.0, 0.2])
    # x^2 y^2 = x^2 f_y / 3 lies in <f, f_y>
    terms = [(0, 3, 0, 1.0), (2, 0, 0, -1.0), (0, 0, 1, 0.3), (1, 0, 1, -0.1), (1, 1, 1, 0.2), (2, 2, 1, 1.0)]
    path = DeformationPath.from_terms(terms, fam.germ, label="linear term")
    u = np.zeros((ctx.settings.nodes, fam.d), dtype=complex)
    u[:, 1] = 1.0
    c_field, _ = vector_field(path, 0.0, (np.zeros(fam.r, dtype=complex), u), fam, ctx.settings)
    ds = path.ds_ypoly(order)
    c_exact = decompose_exact(ds, YPolySeries.y(order), fam).c
    c_quotient = basis_coordinates(fam.germ, fam.monomials, ds, order, ctx.settings.eps_val)
    gap = max(float(np.max(np.abs(c - want))) for c in (c_field, c_exact, c_quotient))
    return _result("linearization", gap, 1e-8, "vector field, exact decomposition and quotient coordinates of dF/ds")


def check_hyperelliptic(ctx, rng):
    germ = normalize_germ(CORPUS["y^4 - x^2"])
    sym = symmetric_basis(germ, "fixed", ctx.settings)
    ok = sym.basis_names == ["1", "y"] and sym.deficit == 1 and bool(sym.warning)
    return _result("hyperelliptic", sym.deficit, 1, sym.warning or "no span-deficit warning", passed=ok)


def check_reality_slice(ctx, rng):
    fam = ctx.family(E1)
    pair = assemble_collection([fam, fam], eta_action=(1, 0))
    single = assemble_collection([fam], eta_action=(0,))
    ok = True
    worst = 0.0
    for _ in range(20):
        t = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        once, member = reality_constrain(pair, t)
        twice, again = reality_constrain(pair, once)
        worst = max(worst, float(np.max(np.abs(twice - once))))
        ok &= again and not member
        built = np.concatenate([t[:4], np.conj(t[:4])])
        kept, inside = reality_constrain(pair, built)
        worst = max(worst, float(np.max(np.abs(kept - built))))
        ok &= inside
        real = rng.standard_normal(4).astype(complex)
        ok &= reality_constrain(single, real)[1] and not reality_constrain(single, real + 1e-6j)[1]
    ok &= pair.real_dimension == 8 and single.real_dimension == 4
    return _result("reality_slice", worst, 1e-12, "20 conjugate-pair and fixed-germ trials",
                   passed=ok and worst <= 1e-12)


def check_ramification(ctx, rng):
    fam = ctx.family(E1)
    s0 = s1 = 1e-3
    res = integrate_path(ramification_path(fam.germ, s0, s1), fam, steps=16, settings=ctx.settings, halving=False)
    err = float(np.max(np.abs(res.phi_final - np.array([-s0, 0, -s1, 0]))))
    report = fiber_classification(fam, res.phi_final)
    return _result("ramification", err, 1e-6, f"end point in T*: {report.simple_branch}",
                   passed=err < 1e-6 and report.simple_branch)


CHECKS = (
    ("e1_anchor", check_e1_anchor),
    ("z3_equivariance", check_z3_equivariance),
    ("trace_identities", check_trace_identities),
    ("pairing_cross_validation", check_pairing_cross_validation),
    ("dual_certificate", check_dual_certificate),
    ("local_constancy", check_local_constancy),
    ("density", check_density),
    ("branch_rank", check_branch_rank),
    ("decomposition", check_decomposition),
    ("classification", check_classification),
    ("linearization", check_linearization),
    ("hyperelliptic", check_hyperelliptic),
    ("reality_slice", check_reality_slice),
    ("ramification", check_ramification),
)


def run_checks(settings=DEFAULTS, names=None):
    """Run the suite in fixed order; a raised error fails its check instead of the run."""
    ctx = CheckContext(settings=settings)
    results = []
    for index, (name, fn) in enumerate(CHECKS):
        if names is not None and name not in names:
            continue
        logger.info(f"running {name}")
        try:
            result = fn(ctx, ctx.rng(index))
        except GermDeformError as e:
            result = CheckResult(name=name, passed=False, value=float("nan"), threshold=0.0,
                                 detail=f"{e.code}: {e.message}")
        if result.passed:
            logger.info(f"OK: {name} ({result.detail})")
        else:
            logger.error(f"{name} failed: {result.detail}")
        results.append(result)
    return results


def format_table(results):
    width = max((len(r.name) for r in results), default=4)
    lines = [f"{'check'.ljust(width)}  status  value"]
    for r in results:
        lines.append(f"{r.name.ljust(width)}  {'pass' if r.passed else 'FAIL'}    {r.value:.3g}")
    return "\n".join(lines)


if __name__ == "__main__":
    out = run_checks(names={"e1_anchor", "trace_identities", "hyperelliptic"})
    print(format_table(out))
