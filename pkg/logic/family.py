"""The universal family G = f + sum t_i g_i and what is evaluated on its fibers."""
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from logic.config import DEFAULTS, get_logger
from logic.errors import IncompatibleRealStructure, InputError, NotSymmetric, OutOfDomain
from logic.germ import (discriminant_x, monomial_name, poly_dx, poly_dy, poly_eval,
                        poly_y_coeffs, trim_poly)
from logic.io_json import clist, cplx
from logic.local_algebra import analyze_quotient, mult_matrix, quotient_coordinates, smith_over_series
from logic.series import YPolySeries

logger = get_logger(__name__)

CERTIFY_START = 0.1
CERTIFY_ITERATIONS = 12
CERTIFY_SAFETY = 0.5
FIBER_NODES = 64
DERIV_TOL = 1e-8
MEMBER_TOL = 1e-12
RELATION_TOL = 1e-10


@dataclass(frozen=True)
class ParameterPoint:
    t: tuple

    @classmethod
    def of(cls, values, r):
        t = tuple(complex(v) for v in np.ravel(np.asarray(values, dtype=complex)))
        if len(t) != r:
            raise InputError(f"a parameter point needs {r} components, got {len(t)}")
        return cls(t)

    @property
    def array(self):
        return np.array(self.t, dtype=complex)

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class FiberReport:
    t: tuple
    smooth: bool
    simple_branch: bool
    branch_points: list
    multiplicity_sum: int
    dis_value: np.ndarray

    def to_json(self):
        return {
            "t": clist(self.t),
            "smooth": bool(self.smooth),
            "simple_branch": bool(self.simple_branch),
            "branch_points": [{"x": cplx(x), "y": cplx(y), "multiplicity": int(m)}
                              for x, y, m in self.branch_points],
            "multiplicity_sum": int(self.multiplicity_sum),
            "dis_value": clist(self.dis_value),
        }


def family_poly(germ_poly, monomials, t):
    """Coefficient array of f + sum t_i x^a_i y^b_i."""
    base = np.asarray(germ_poly, dtype=complex)
    rows = max([base.shape[0]] + [a + 1 for a, _ in monomials])
    out = np.zeros((rows, base.shape[1]), dtype=complex)
    out[:base.shape[0]] = base
    for (a, b), ti in zip(monomials, t):
        out[a, b] += ti
    return out


def disc_roots(poly):
    disc = trim_poly(discriminant_x(poly))
    if disc.size <= 1:
        return np.zeros(0, dtype=complex), disc
    return np.roots(disc[::-1]), disc


def _max_fiber_root(poly, radius, nodes=FIBER_NODES):
    x = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    return max(float(np.max(np.abs(np.roots(row[::-1])), initial=0.0)) for row in poly_y_coeffs(poly, x))


def fiber_is_contained(poly, r, delta1, delta2):
    """Branch points inside |x| < delta1 stay in |x| < delta1/2, r of them, and fibers stay in |y| < delta2."""
    roots, _ = disc_roots(poly)
    inside = roots[np.abs(roots) < delta1]
    if inside.size != r or np.any(np.abs(inside) >= delta1 / 2):
        return False
    return _max_fiber_root(poly, delta1) < delta2


def certify_param_box(germ, monomials, settings=DEFAULTS):
    """Bisect a polydisc radius on which the containment checks pass along seeded random directions."""
    r = len(monomials)
    if r == 0:
        return 0.0, ()
    rng = np.random.default_rng(settings.seed)
    directions = np.exp(2j * np.pi * rng.random((settings.box_directions, r)))

    def valid(radius):
        return all(fiber_is_contained(family_poly(germ.poly, monomials, radius * u), r, germ.delta1, germ.delta2)
                   for u in directions)

    notes = []
    if valid(CERTIFY_START):
        good = CERTIFY_START
    else:
        lo, hi = 0.0, CERTIFY_START
        for _ in range(CERTIFY_ITERATIONS):
            mid = 0.5 * (lo + hi)
            if valid(mid):
                lo = mid
            else:
                hi = mid
        good = lo
        if good == 0.0:
            raise OutOfDomain("no parameter radius passed the containment checks")
        notes.append(f"parameter box shrank below {CERTIFY_START} to {good:.4g} during certification")
        logger.warning(notes[-1])
    return CERTIFY_SAFETY * good, tuple(notes)


@dataclass(frozen=True)
class UniversalFamily:
    germ: object
    quotient: object
    param_box: float
    settings: object = DEFAULTS
    notes: tuple = field(default=())

    @property
    def r(self):
        return self.quotient.r

    @property
    def d(self):
        return self.germ.d

    @property
    def monomials(self):
        return self.quotient.monomials

    @property
    def basis_g(self):
        return self.quotient.basis_g

    @property
    def dual_h(self):
        return self.quotient.dual_h

    @property
    def basis_names(self):
        return self.quotient.basis_names

    @property
    def contour_radius(self):
        return self.settings.contour_fraction * self.germ.delta1

    def poly_at(self, t):
        t = np.zeros(self.r, dtype=complex) if t is None else np.asarray(getattr(t, "t", t), dtype=complex)
        return family_poly(self.germ.poly, self.monomials, t)

    def coeff_fn(self, t):
        poly = self.poly_at(t)
        return lambda x: poly_y_coeffs(poly, x)

    def evaluate(self, x, y, t):
        return poly_eval(self.poly_at(t), x, y)

    def evaluate_dx(self, x, y, t):
        return poly_eval(poly_dx(self.poly_at(t)), x, y)

    def evaluate_dy(self, x, y, t):
        return poly_eval(poly_dy(self.poly_at(t)), x, y)

    def evaluate_dyy(self, x, y, t):
        return poly_eval(poly_dy(poly_dy(self.poly_at(t))), x, y)

    def check_point(self, t):
        """ParameterPoint of the right length inside the certified box."""
        point = t if isinstance(t, ParameterPoint) else ParameterPoint.of(t, self.r)
        if len(point) != self.r:
            raise InputError(f"a parameter point needs {self.r} components, got {len(point)}")
        size = float(np.max(np.abs(point.array), initial=0.0))
        if size > self.param_box * (1 + 1e-9):
            raise OutOfDomain(f"|t| = {size:.4g} is outside the certified box {self.param_box:.4g}")
        return point

    def random_point(self, rng, fraction=1.0):
        radius = fraction * self.param_box * np.sqrt(rng.random(self.r))
        return ParameterPoint.of(radius * np.exp(2j * np.pi * rng.random(self.r)), self.r)

    def to_json(self):
        return {
            "d": self.d,
            "r": self.r,
            "basis": self.basis_names,
            "param_box": self.param_box,
            "delta1": self.germ.delta1,
            "delta2": self.germ.delta2,
            "x_scale": self.germ.x_scale,
            "divisor_orders": list(self.quotient.divisor_orders),
            "dual_certificate": self.quotient.certificate(),
            "seed": self.settings.seed,
            "notes": list(self.germ.notes) + list(self.notes),
        }


def build_family(germ, settings=DEFAULTS, monomials=None):
    quotient = analyze_quotient(germ, settings, monomials)
    box, notes = certify_param_box(germ, quotient.monomials, settings)
    fam = UniversalFamily(germ=germ, quotient=quotient, param_box=box, settings=settings, notes=notes)
    if fam.r == 0:
        logger.info("OK: rigid germ, the universal family has no parameters")
    else:
        logger.info(f"OK: family with basis {fam.basis_names} certified on |t_i| <= {box:.4g}")
    return fam


def _inside_roots(fam, poly):
    roots, disc = disc_roots(poly)
    inside = roots[np.abs(roots) < fam.germ.delta1]
    if inside.size != fam.r:
        raise OutOfDomain(f"{inside.size} branch points inside |x| < {fam.germ.delta1}, expected {fam.r}")
    return roots, inside, disc


def _dis_coefficients(roots, inside, disc):
    if roots.size == inside.size:
        monic = disc[::-1] / disc[-1]
        return monic[1:].astype(complex)
    return np.poly(inside)[1:].astype(complex)


def dis_map(fam, t):
    """Coefficients below the leading 1 (descending powers) of the monic polynomial of the inside branch values."""
    point = fam.check_point(t)
    if fam.r == 0:
        return np.zeros(0, dtype=complex)
    return _dis_coefficients(*_inside_roots(fam, fam.poly_at(point)))


def cluster_roots(roots, radius):
    """Group numerically coincident roots; returns (centre, multiplicity) pairs."""
    roots = np.asarray(roots, dtype=complex)
    if roots.size == 0:
        return []
    if roots.size == 1:
        return [(complex(roots[0]), 1)]
    z = linkage(np.column_stack([roots.real, roots.imag]), method="single")
    labels = fcluster(z, t=radius, criterion="distance")
    out = []
    for label in np.unique(labels):
        members = roots[labels == label]
        out.append((complex(np.mean(members)), int(members.size)))
    return sorted(out, key=lambda c: (abs(c[0]), np.angle(c[0])))


def _branch_y(poly, x0):
    """Point of V(G) over x0 where G_y vanishes (closest root of G_y to the curve)."""
    gy = poly_y_coeffs(poly_dy(poly), [x0])[0]
    candidates = np.roots(trim_poly(gy)[::-1]) if trim_poly(gy).size > 1 else np.zeros(1, dtype=complex)
    values = np.abs(poly_eval(poly, np.full(candidates.shape, x0), candidates))
    return complex(candidates[int(np.argmin(values))])


def fiber_classification(fam, t):
    point = fam.check_point(t)
    poly = fam.poly_at(point)
    if fam.r == 0:
        return FiberReport(t=point.t, smooth=True, simple_branch=True, branch_points=[], multiplicity_sum=0,
                           dis_value=np.zeros(0, dtype=complex))
    roots, inside, disc = _inside_roots(fam, poly)
    clusters = cluster_roots(inside, fam.settings.cluster_radius)
    gx, gyy = poly_dx(poly), poly_dy(poly_dy(poly))
    smooth, simple, points = True, True, []
    for x0, mult in clusters:
        y0 = _branch_y(poly, x0)
        points.append((x0, y0, mult))
        if abs(poly_eval(gx, x0, y0)) <= DERIV_TOL:
            smooth = False
        if mult != 1 or abs(poly_eval(gyy, x0, y0)) <= DERIV_TOL:
            simple = False
    total = sum(m for x0, _, m in points if abs(x0) < fam.germ.delta1 / 2)
    return FiberReport(t=point.t, smooth=smooth, simple_branch=smooth and simple, branch_points=points,
                       multiplicity_sum=total, dis_value=_dis_coefficients(roots, inside, disc))


def multiplicity_conservation_check(fam, t):
    return fiber_classification(fam, t).multiplicity_sum == fam.r


def branch_velocity(fam, t, t_dot):
    """d x_b / d(epsilon) along t + epsilon * t_dot for each simple branch point: -t_dot.g / G_x."""
    report = fiber_classification(fam, t)
    if not report.simple_branch:
        raise OutOfDomain("branch velocities are defined at simple branch points only")
    poly = fam.poly_at(report.t)
    t_dot = np.asarray(t_dot, dtype=complex)
    out = []
    for x0, y0, _ in report.branch_points:
        g = fam.quotient.g_values(x0, y0)
        out.append(-complex(np.dot(t_dot, g)) / complex(poly_eval(poly_dx(poly), x0, y0)))
    return [p[0] for p in report.branch_points], np.array(out)


# symmetric and real structures


def sigma_reflect(poly):
    """Coefficients of f(-x, y)."""
    poly = np.asarray(poly, dtype=complex)
    return poly * ((-1.0) ** np.arange(poly.shape[0]))[:, None]


def eta_conjugate(poly):
    """Coefficients of conj(f)(conj x, conj y)."""
    return np.conj(np.asarray(poly, dtype=complex))


def _pure_power_form(poly, eps=RELATION_TOL):
    """(m, k, c) when f = y^m - c x^k, else None."""
    terms = [(a, b, poly[a, b]) for a in range(poly.shape[0]) for b in range(poly.shape[1]) if abs(poly[a, b]) > eps]
    tops = [(a, b, c) for a, b, c in terms if b == poly.shape[1] - 1]
    rest = [(a, b, c) for a, b, c in terms if b != poly.shape[1] - 1]
    if len(tops) != 1 or tops[0][0] != 0 or len(rest) != 1 or rest[0][1] != 0:
        return None
    return poly.shape[1] - 1, rest[0][0], -rest[0][2]


@dataclass(frozen=True)
class SymmetricBasis:
    monomials: tuple
    sigma_type: str
    r_param: int
    symmetric_dimension: int
    deficit: int
    warning: str = ""

    @property
    def basis_names(self):
        return [monomial_name(a, b) for a, b in self.monomials]

    def to_json(self):
        return {
            "basis": self.basis_names,
            "sigma_type": self.sigma_type,
            "r": self.r_param,
            "symmetric_dimension": self.symmetric_dimension,
            "span_deficit": self.deficit,
            "warning": self.warning,
        }


def symmetric_part_dimension(germ, order):
    """Rank of the sigma-invariant monomials x^(2j) y^b in the deformation quotient."""
    fp = germ.ypoly(order)
    sf = smith_over_series(mult_matrix(fp, fp.dy(), order))
    top = max(sf.orders, default=0)
    rows = [quotient_coordinates(sf, fp, YPolySeries.monomial(a, b, order))
            for a in range(0, top + 1, 2) for b in range(germ.d)]
    if not rows or sum(sf.orders) == 0:
        return 0
    return int(np.linalg.matrix_rank(np.array(rows), tol=1e-7))


def symmetric_basis(germ, sigma_type="fixed", settings=DEFAULTS):
    """(1, y, ..., y^(r-1)) for f = y^(r+2) - c x^k: k = 2 when sigma fixes the germ, k = 1 when it swaps."""
    if sigma_type not in ("fixed", "swap"):
        raise InputError(f"sigma_type is 'fixed' or 'swap', got {sigma_type!r}")
    form = _pure_power_form(germ.poly)
    want = 2 if sigma_type == "fixed" else 1
    if form is None or form[1] != want:
        raise NotSymmetric(f"f is not of the form y^m - c x^{want}")
    if sigma_type == "fixed" and np.max(np.abs(sigma_reflect(germ.poly) - germ.poly)) > RELATION_TOL:
        raise NotSymmetric("f(-x, y) differs from f(x, y)")
    m = form[0]
    r_param = max(m - 2, 0)
    monomials = tuple((0, b) for b in range(r_param))
    sym_dim = symmetric_part_dimension(germ, settings.truncation(germ.r))
    deficit = sym_dim - r_param
    warning = ""
    if deficit:
        warning = (f"span deficit: the prescribed basis has {r_param} elements while the "
                   f"sigma-symmetric part of the quotient has dimension {sym_dim}")
        logger.warning(warning)
    return SymmetricBasis(monomials=monomials, sigma_type=sigma_type, r_param=r_param,
                          symmetric_dimension=sym_dim, deficit=deficit, warning=warning)


def _same_poly(p, q, tol=RELATION_TOL):
    rows = max(p.shape[0], q.shape[0])
    cols = max(p.shape[1], q.shape[1])
    a = np.zeros((rows, cols), dtype=complex)
    b = np.zeros((rows, cols), dtype=complex)
    a[:p.shape[0], :p.shape[1]] = p
    b[:q.shape[0], :q.shape[1]] = q
    return float(np.max(np.abs(a - b), initial=0.0)) <= tol


def _check_involution(action, n, error, name):
    action = tuple(range(n)) if action is None else tuple(int(a) for a in action)
    if len(action) != n or any(a < 0 or a >= n for a in action):
        raise error(f"{name} must map each of the {n} germs to a germ index")
    if any(action[action[i]] != i for i in range(n)):
        raise error(f"{name} is not an involution: {list(action)}")
    return action


@dataclass(frozen=True)
class GermCollection:
    families: tuple
    sigma_action: tuple
    eta_action: tuple = None
    eta_fixed_constraints: tuple = ()

    @property
    def offsets(self):
        out = [0]
        for fam in self.families:
            out.append(out[-1] + fam.r)
        return out

    @property
    def dimension(self):
        return self.offsets[-1]

    @property
    def real_dimension(self):
        """Real dimension of the slice t_(eta l) = conj(t_l)."""
        if self.eta_action is None:
            return 2 * self.dimension
        total = 0
        for l, m in enumerate(self.eta_action):
            if l == m:
                total += self.families[l].r
            elif l < m:
                total += 2 * self.families[l].r
        return total

    def split(self, t):
        t = np.asarray(t, dtype=complex).ravel()
        if t.size != self.dimension:
            raise InputError(f"the collection has {self.dimension} parameters, got {t.size}")
        off = self.offsets
        return [t[off[l]:off[l + 1]] for l in range(len(self.families))]

    def dis_map(self, t):
        return np.concatenate([dis_map(fam, tl) for fam, tl in zip(self.families, self.split(t))]
                              + [np.zeros(0, dtype=complex)])


def assemble_collection(families, sigma_action=None, eta_action=None):
    families = tuple(families)
    n = len(families)
    sigma = _check_involution(sigma_action, n, NotSymmetric, "sigma")
    for l, m in enumerate(sigma if sigma_action is not None else ()):
        p, q = families[l], families[m]
        if not _same_poly(q.germ.poly, sigma_reflect(p.germ.poly)) or q.monomials != p.monomials:
            raise NotSymmetric(f"germ {m} is not the sigma-image of germ {l}")
    eta, fixed = None, ()
    if eta_action is not None:
        eta = _check_involution(eta_action, n, IncompatibleRealStructure, "eta")
        for l, m in enumerate(eta):
            p, q = families[l], families[m]
            if not _same_poly(q.germ.poly, eta_conjugate(p.germ.poly)):
                raise IncompatibleRealStructure(f"germ {m} is not the conjugate of germ {l}")
            if q.monomials != p.monomials:
                raise IncompatibleRealStructure(f"bases of germs {l} and {m} are not conjugate")
        fixed = tuple(l == m for l, m in enumerate(eta))
    logger.info(f"OK: collection of {n} germs with {sum(f.r for f in families)} parameters")
    return GermCollection(families=families, sigma_action=sigma, eta_action=eta, eta_fixed_constraints=fixed)


def reality_constrain(coll, t):
    """Nearest point of t_(eta l) = conj(t_l), and whether t already lies on it."""
    if coll.eta_action is None:
        raise IncompatibleRealStructure("the collection carries no real structure")
    parts = [p.copy() for p in coll.split(t)]
    for l, m in enumerate(coll.eta_action):
        if l == m:
            parts[l] = parts[l].real.astype(complex)
        elif l < m:
            mid = 0.5 * (parts[l] + np.conj(parts[m]))
            parts[l], parts[m] = mid, np.conj(mid)
    projected = np.concatenate(parts + [np.zeros(0, dtype=complex)])
    member = float(np.max(np.abs(projected - np.asarray(t, dtype=complex).ravel()), initial=0.0)) <= MEMBER_TOL
    return projected, member


if __name__ == "__main__":
    from logic.germ import normalize_germ

    fam = build_family(normalize_germ([(0, 3, 1.0), (2, 0, -1.0)]))
    print(f"[OK] e1 family: basis {fam.basis_names}, box {fam.param_box:.4g}, dis(0) = {dis_map(fam, [0] * 4)}")
