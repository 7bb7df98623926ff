"""The quotient C{x}[y]/<f, f_y>: Smith reduction, monomial basis, residue pairing, dual basis."""
from dataclasses import dataclass
from functools import reduce

import numpy as np

from logic.config import DEFAULTS, EPS_VAL, get_logger
from logic.contour import contour_residue, horner, roots_on_circle
from logic.errors import ContourTooClose, OutOfDomain, RankDeficient, SingularPairing
from logic.germ import Germ, monomial_name
from logic.series import TruncSeries, YPolySeries, stable_at, ypoly_reduce

logger = get_logger(__name__)


def _as_ypoly(f, order):
    if isinstance(f, Germ):
        return f.ypoly(order)
    return f


def _total(terms):
    return reduce(lambda a, b: a + b, terms)


def mult_matrix(f, phi, order=None):
    """Multiplication by phi on C{x}[y]/<f> in the basis 1, y, ..., y^(d-1).

    ``m[j][k]`` is the coefficient of y^j in phi * y^k reduced mod f.
    """
    order = phi.order if order is None else order
    fp = _as_ypoly(f, order)
    d = fp.degree_bound - 1
    m = [[None] * d for _ in range(d)]
    for k in range(d):
        col = ypoly_reduce(phi * YPolySeries.monomial(0, k, order), fp).padded(d)
        for j in range(d):
            m[j][k] = col.coeffs[j]
    return m


@dataclass(frozen=True)
class SmithForm:
    """U * M * V = diag(diagonal); diagonal[i] has valuation orders[i]."""
    orders: tuple
    U: list
    V: list
    diagonal: list

    @property
    def size(self):
        return len(self.orders)


def _identity(n, order):
    return [[TruncSeries.one(order) if i == j else TruncSeries.zero(order) for j in range(n)] for i in range(n)]


def smith_over_series(m, eps=EPS_VAL):
    """Smith reduction of a square matrix over C{x} at jet level."""
    n = len(m)
    order = min(e.order for row in m for e in row) if n else 0
    a = [list(row) for row in m]
    u = _identity(n, order)
    v = _identity(n, order)
    orders = []
    for k in range(n):
        best, where = None, None
        for i in range(k, n):
            for j in range(k, n):
                val = a[i][j].effective_valuation(eps)
                if val is None:
                    continue
                key = (val, -abs(a[i][j].normalized(eps).leading))
                if best is None or key < best:
                    best, where = key, (i, j)
        if where is None:
            raise RankDeficient(f"no pivot of valuation below the truncation order in block {k}")
        i, j = where
        a[k], a[i] = a[i], a[k]
        u[k], u[i] = u[i], u[k]
        for row in a:
            row[k], row[j] = row[j], row[k]
        for row in v:
            row[k], row[j] = row[j], row[k]
        pivot = a[k][k].normalized(eps)
        a[k][k] = pivot
        pinv = pivot.inv(eps)
        for i in range(k + 1, n):
            entry = a[i][k].normalized(eps)
            if entry.is_zero():
                a[i][k] = TruncSeries.zero(entry.order)
                continue
            fac = entry * pinv
            for j in range(k + 1, n):
                a[i][j] = a[i][j] - fac * a[k][j]
            for j in range(n):
                u[i][j] = u[i][j] - fac * u[k][j]
            a[i][k] = TruncSeries.zero(entry.order)
        for j in range(k + 1, n):
            entry = a[k][j].normalized(eps)
            if entry.is_zero():
                a[k][j] = TruncSeries.zero(entry.order)
                continue
            fac = pinv * entry
            for i in range(n):
                v[i][j] = v[i][j] - v[i][k] * fac
            a[k][j] = TruncSeries.zero(entry.order)
        orders.append(pivot.valuation)
    logger.debug(f"smith orders {orders}")
    return SmithForm(orders=tuple(orders), U=u, V=v, diagonal=[a[k][k] for k in range(n)])


def matvec(m, vec):
    return [_total([m[i][j] * vec[j] for j in range(len(vec))]) for i in range(len(m))]


def matmul(a, b):
    n, p = len(b), len(b[0])
    return [[_total([a[i][k] * b[k][j] for k in range(n)]) for j in range(p)] for i in range(len(a))]


def smith_solve(sf, rhs, eps=EPS_VAL):
    """Solve M q = rhs over Laurent jets: q = V D^-1 U rhs."""
    w = matvec(sf.U, rhs)
    w = [wi * di.inv(eps) for wi, di in zip(w, sf.diagonal)]
    return matvec(sf.V, w)


def char_poly_series(m):
    """det(Y - M) as a monic polynomial in Y, via power traces and Newton's identities."""
    n = len(m)
    order = min(e.order for row in m for e in row)
    power = m
    traces = []
    for k in range(n):
        if k:
            power = matmul(power, m)
        traces.append(_total([power[i][i] for i in range(n)]))
    elem = [TruncSeries.one(order)]
    for k in range(1, n + 1):
        acc = _total([elem[k - i] * traces[i - 1] * (1.0 if i % 2 else -1.0) for i in range(1, k + 1)])
        elem.append(acc * (1.0 / k))
    coeffs = [elem[n - j] * ((-1.0) ** (n - j)) for j in range(n)] + [TruncSeries.one(order)]
    return YPolySeries(coeffs)


def quotient_coordinates(sf, f, phi):
    """Coordinates of phi in C{x}[y]/<f, f_y>, read off the Smith transform."""
    fp = _as_ypoly(f, phi.order)
    d = fp.degree_bound - 1
    rem = ypoly_reduce(phi, fp).padded(d)
    w = matvec(sf.U, list(rem.coeffs[:d]))
    return np.concatenate([wi.dense(0, e) for wi, e in zip(w, sf.orders)] + [np.zeros(0, dtype=complex)])


def basis_coordinates(f, monomials, phi, order, eps=EPS_VAL):
    """Coefficients c with phi = sum c_i x^a_i y^b_i modulo <f, f_y>."""
    fp = _as_ypoly(f, order)
    sf = smith_over_series(mult_matrix(fp, fp.dy(), order), eps)
    rows = np.array([quotient_coordinates(sf, fp, YPolySeries.monomial(a, b, order)) for a, b in monomials])
    target = quotient_coordinates(sf, fp, phi.truncate(order))
    c, *_ = np.linalg.lstsq(rows.T, target, rcond=None)
    return c


def _candidates(d, max_a):
    cells = [(a, b) for a in range(max_a + 1) for b in range(d)]
    return sorted(cells, key=lambda ab: (ab[0] + ab[1], ab[1], ab[0]))


def monomial_basis(f, order, eps=EPS_VAL, sf=None):
    """Smallest monomials x^a y^b (b < d) spanning the quotient, under (a + b, b, a)."""
    fp = _as_ypoly(f, order)
    d = fp.degree_bound - 1
    if sf is None:
        sf = smith_over_series(mult_matrix(fp, fp.dy(), order), eps)
    r = sum(sf.orders)
    chosen, rows = [], []
    for a, b in _candidates(d, max(sf.orders, default=0)):
        if len(chosen) == r:
            break
        coords = quotient_coordinates(sf, fp, YPolySeries.monomial(a, b, order))
        trial = np.array(rows + [coords])
        if np.linalg.matrix_rank(trial, tol=1e-7) > len(rows):
            chosen.append((a, b))
            rows.append(coords)
    if len(chosen) != r:
        raise RankDeficient(f"monomials span only {len(chosen)} of {r} quotient directions")
    return chosen


def jet_dimension(f, order, phi=None, eps=EPS_VAL):
    """Length of C{x}[y]/<f, phi>, default phi = f_y, as the sum of Smith orders."""
    fp = _as_ypoly(f, order)
    phi = fp.dy() if phi is None else phi
    return sum(smith_over_series(mult_matrix(fp, phi, order), eps).orders)


def fy_inverse_mod_f(f, order, eps=EPS_VAL):
    """q with f_y * q = 1 mod f, coefficients Laurent in x."""
    fp = _as_ypoly(f, order)
    d = fp.degree_bound - 1
    sf = smith_over_series(mult_matrix(fp, fp.dy(), order), eps)
    rhs = [TruncSeries.one(order)] + [TruncSeries.zero(order)] * (d - 1)
    return YPolySeries(smith_solve(sf, rhs, eps))


def trace_coefficient(phi, f):
    """Sum over the roots of phi/f_y: the y^(d-1) coefficient of a reduced phi."""
    d = f.d if isinstance(f, Germ) else f.degree_bound - 1
    return phi.coeff(d - 1)


def _pairing_at(g, h, f, order, q=None):
    fp = _as_ypoly(f, order)
    q = fy_inverse_mod_f(fp, order) if q is None else q
    phi = ypoly_reduce(g.truncate(order) * h.truncate(order) * q, fp)
    tr = trace_coefficient(phi, f)
    return tr.coeff(-1) if tr.order > -1 else 0j


def residue_pairing(g, h, f, order=None, q=None, check=True):
    """Res sum_sheets g h / f_y^2 dx at x = 0, exact at jet level.

    With ``check`` the pairing is recomputed four orders higher and a change above
    1e-8 raises TruncationUnstable; callers already inside ``stable_at`` turn it off.
    """
    order = order or min(g.order, h.order)
    if not check:
        return _pairing_at(g, h, f, order, q)
    return stable_at(lambda n: _pairing_at(g, h, f, n, q if n == order else None), order)


def monomial_values(monomials, x, y):
    """x^a y^b for each monomial, stacked on the last axis."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if not monomials:
        return np.zeros(np.broadcast(x, y).shape + (0,), dtype=complex)
    return np.stack([x ** a * y ** b for a, b in monomials], axis=-1)


def pairing_matrix(f, left, right, order):
    fp = _as_ypoly(f, order)
    q = fy_inverse_mod_f(fp, order)
    return np.array([[residue_pairing(g, h, fp, order, q, check=False) for h in right] for g in left], dtype=complex)


def dual_basis(f, monomials, order, cond_limit=1e12):
    """Coefficient matrix C with h_j = sum_k C[k, j] g_k and pairing(g_i, h_j) = delta_ij."""
    r = len(monomials)
    if r == 0:
        return np.zeros((0, 0), dtype=complex), np.zeros((0, 0), dtype=complex)

    def compute(n):
        basis = [YPolySeries.monomial(a, b, n) for a, b in monomials]
        return pairing_matrix(f, basis, basis, n)

    pmat = stable_at(compute, order)
    cond = np.linalg.cond(pmat)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularPairing(f"pairing matrix condition number {cond:.3g} exceeds {cond_limit:.0e}")
    return np.linalg.inv(pmat), pmat


@dataclass(frozen=True)
class QuotientData:
    d: int
    monomials: tuple
    dual_coeffs: np.ndarray
    divisor_orders: tuple
    pairing_matrix_at_0: np.ndarray
    order: int

    @property
    def r(self):
        return len(self.monomials)

    @property
    def basis_g(self):
        return [YPolySeries.monomial(a, b, self.order) for a, b in self.monomials]

    @property
    def dual_h(self):
        out = []
        for j in range(self.r):
            acc = YPolySeries((TruncSeries.zero(self.order),))
            for k, g in enumerate(self.basis_g):
                acc = acc + g * complex(self.dual_coeffs[k, j])
            out.append(acc)
        return out

    @property
    def basis_names(self):
        return [monomial_name(a, b) for a, b in self.monomials]

    def g_values(self, x, y):
        return monomial_values(self.monomials, x, y)

    def h_values(self, x, y):
        return self.g_values(x, y) @ self.dual_coeffs

    def certificate(self):
        """max |pairing(g_i, h_j) - delta_ij|."""
        if self.r == 0:
            return 0.0
        return float(np.max(np.abs(self.pairing_matrix_at_0 @ self.dual_coeffs - np.eye(self.r))))


def analyze_quotient(germ, settings=DEFAULTS, monomials=None):
    """Basis, dual basis and Smith data of the deformation quotient of a germ."""
    order = settings.truncation(germ.r)
    fp = germ.ypoly(order)
    sf = smith_over_series(mult_matrix(fp, fp.dy(), order), settings.eps_val)
    if sum(sf.orders) != germ.r:
        raise RankDeficient(f"Smith orders sum to {sum(sf.orders)}, discriminant order is {germ.r}")
    if monomials is None:
        monomials = monomial_basis(fp, order, settings.eps_val, sf)
    monomials = tuple(tuple(m) for m in monomials)
    if len(monomials) != germ.r:
        raise RankDeficient(f"a basis needs {germ.r} elements, got {len(monomials)}")
    dual, pmat = dual_basis(germ, monomials, order)
    data = QuotientData(d=germ.d, monomials=monomials, dual_coeffs=dual, divisor_orders=sf.orders,
                        pairing_matrix_at_0=pmat, order=order)
    logger.info(f"OK: quotient basis {data.basis_names}, divisor orders {list(sf.orders)}")
    return data


def contour_pairing_matrix(coeff_fn, monomials, radius, nodes, sep_tol=1e-6):
    """Res sum_sheets g_i g_k / P_y^2 dx over |x| = radius for the y-polynomial given by ``coeff_fn``."""
    r = len(monomials)
    if r == 0:
        return np.zeros((0, 0), dtype=complex)
    sheets = roots_on_circle(coeff_fn, radius, nodes, sep_tol)
    coeffs = np.asarray(coeff_fn(sheets.x_nodes), dtype=complex)
    _, py = horner(coeffs, sheets.sheets)
    g = monomial_values(monomials, sheets.x_nodes[:, None], sheets.sheets)
    integrand = np.einsum("mki,mkj,mk->mij", g, g, 1.0 / py ** 2)
    return contour_residue(integrand, sheets.radius_x)


def B_matrix(fam, t, nodes=None):
    """B_ij(t) = Res sum_sheets g_i h_j / G_y^2 dx over |x| = contour radius."""
    settings = fam.settings
    q = fam.quotient
    try:
        pmat = contour_pairing_matrix(fam.coeff_fn(t), q.monomials, fam.contour_radius,
                                      nodes or settings.nodes, settings.sep_tol)
    except ContourTooClose as e:
        raise OutOfDomain(f"fiber roots approach the contour: {e.message}")
    return pmat @ q.dual_coeffs


if __name__ == "__main__":
    from logic.germ import normalize_germ

    data = analyze_quotient(normalize_germ([(0, 3, 1.0), (2, 0, -1.0)]))
    print(f"[OK] y^3 - x^2: basis {data.basis_names}, certificate {data.certificate():.2e}")
