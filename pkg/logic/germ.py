import numpy as np
import numpy.polynomial.polynomial as npoly
import sympy as sp
from dataclasses import dataclass, field

from logic.config import EPS_VAL, get_logger
from logic.errors import DegenerateGerm, InputError, NotWeierstrass
from logic.series import YPolySeries

logger = get_logger(__name__)

_X, _Y = sp.symbols("x y")

MARGIN_NOTE = "delta1/delta2 margin factors are artifact choices (the construction only asks for 'sufficiently small')"


# x-polynomial helpers (coefficient arrays low -> high)

def trim_poly(p, rel=1e-13):
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    if p.size == 0:
        return np.zeros(1, dtype=complex)
    scale = float(np.max(np.abs(p)))
    k = p.size - 1
    while k > 0 and abs(p[k]) <= rel * scale:
        k -= 1
    return p[:k + 1].copy()


def _size(p):
    return float(np.max(np.abs(p))) if p.size else 0.0


def _exact(z):
    z = complex(z)
    return sp.Rational(z.real) + sp.I * sp.Rational(z.imag)


def discriminant_x(poly):
    """Discriminant in y of a monic y-polynomial with polynomial x-coefficients.

    ``poly[a, b]`` is the coefficient of x^a y^b.  The result is the x-polynomial
    (-1)^(d(d-1)/2) * Res_y(P, P_y), low -> high.  Float coefficients are read as
    exact Gaussian rationals, so the resultant carries no cancellation error.
    """
    poly = np.atleast_2d(np.asarray(poly, dtype=complex))
    d = poly.shape[1] - 1
    if d < 1:
        raise NotWeierstrass("the polynomial has no y-degree")
    if d == 1:
        return np.ones(1, dtype=complex)
    terms = {(b, a): _exact(poly[a, b]) for a in range(poly.shape[0]) for b in range(d + 1) if poly[a, b] != 0}
    p = sp.Poly.from_dict(terms, _Y, _X, domain=sp.QQ_I)
    res = p.resultant(p.diff(_Y))
    coeffs = np.array([complex(c) for c in res.all_coeffs()[::-1]], dtype=complex)
    return coeffs if (d * (d - 1) // 2) % 2 == 0 else -coeffs


def vanishing_order(p, rel=1e-9):
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    scale = _size(p)
    if scale == 0.0:
        return None
    return int(np.nonzero(np.abs(p) > rel * scale)[0][0])


def poly_y_coeffs(poly, x):
    """Numeric y-coefficients of P(x, .) at the points x, shape (len(x), d+1)."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    return npoly.polyval(x, np.asarray(poly, dtype=complex)).T


def poly_eval(poly, x, y):
    """P(x, y) for any x and y that broadcast together, e.g. (M, 1) nodes against (M, d) sheets."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))
    return npoly.polyval2d(x, y, poly)


def poly_dx(poly):
    poly = np.asarray(poly, dtype=complex)
    if poly.shape[0] == 1:
        return np.zeros_like(poly)
    return npoly.polyder(poly, axis=0)


def poly_dy(poly):
    poly = np.asarray(poly, dtype=complex)
    if poly.shape[1] == 1:
        return np.zeros_like(poly)
    return npoly.polyder(poly, axis=1)


def terms_to_poly(terms):
    """(a, b, coefficient) triples -> dense coefficient array."""
    terms = list(terms)
    if not terms:
        raise InputError("a germ needs at least one term")
    na = max(int(a) for a, _, _ in terms) + 1
    nb = max(int(b) for _, b, _ in terms) + 1
    poly = np.zeros((na, nb), dtype=complex)
    for a, b, c in terms:
        if a < 0 or b < 0:
            raise InputError(f"negative exponent in term x^{a} y^{b}")
        poly[int(a), int(b)] += complex(c)
    return poly


def poly_to_terms(poly, eps=0.0):
    poly = np.asarray(poly, dtype=complex)
    return [(a, b, complex(poly[a, b])) for a in range(poly.shape[0]) for b in range(poly.shape[1])
            if abs(poly[a, b]) > eps]


def monomial_name(a, b):
    parts = []
    if a:
        parts.append("x" if a == 1 else f"x^{a}")
    if b:
        parts.append("y" if b == 1 else f"y^{b}")
    return "*".join(parts) or "1"


def _nonzero_disc_roots(disc, r):
    rest = trim_poly(np.asarray(disc)[r:])
    if rest.size <= 1:
        return np.zeros(0, dtype=complex)
    return np.roots(rest[::-1])


def _max_fiber_root(poly, radius, nodes=128):
    x = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    coeffs = poly_y_coeffs(poly, x)
    return max(float(np.max(np.abs(np.roots(row[::-1])), initial=0.0)) for row in coeffs)


@dataclass(frozen=True)
class Germ:
    poly: np.ndarray
    d: int
    r: int
    disc_x: np.ndarray
    delta1: float
    delta2: float
    x_scale: float = 1.0
    notes: tuple = field(default=(MARGIN_NOTE,))

    def ypoly(self, order):
        return YPolySeries.from_array(self.poly, order)

    def fy(self, order):
        return self.ypoly(order).dy()

    def y_coeffs(self, x):
        return poly_y_coeffs(self.poly, x)

    def evaluate(self, x, y):
        return poly_eval(self.poly, x, y)

    @property
    def terms(self):
        return poly_to_terms(self.poly)

    @property
    def annulus(self):
        return (self.delta1 / 2.0, self.delta1)

    def to_json(self):
        return {
            "d": self.d,
            "r": self.r,
            "terms": [[a, b, c.real, c.imag] for a, b, c in self.terms],
            "delta1": self.delta1,
            "delta2": self.delta2,
            "x_scale": self.x_scale,
            "disc_x": [[c.real, c.imag] for c in self.disc_x],
            "notes": list(self.notes),
        }


def _check_weierstrass(poly, eps=EPS_VAL):
    cols = [b for b in range(poly.shape[1]) if np.any(np.abs(poly[:, b]) > eps)]
    if not cols:
        raise NotWeierstrass("the germ is identically zero")
    d = max(cols)
    poly = poly[:, :d + 1]
    if d < 1:
        raise NotWeierstrass("the germ does not depend on y")
    top = poly[:, d]
    if abs(top[0]) <= eps or np.any(np.abs(top[1:]) > eps):
        raise NotWeierstrass(f"the coefficient of y^{d} is not a nonzero constant")
    poly = poly / top[0]
    if np.any(np.abs(poly[0, :d]) > eps):
        raise NotWeierstrass("lower y-coefficients must vanish at x = 0")
    poly[:, d] = 0
    poly[0, d] = 1.0
    return poly, d


def normalize_germ(raw, delta1=None, delta2=None):
    """Validate a Weierstrass polynomial given as (a, b, coefficient) terms and fix its radii."""
    poly, d = _check_weierstrass(terms_to_poly(raw))
    disc = discriminant_x(poly)
    r = vanishing_order(disc)
    if r is None:
        raise DegenerateGerm("the discriminant vanishes identically (non-reduced germ)")
    scale = 1.0
    nonzero = _nonzero_disc_roots(disc, r)
    if delta1 is None:
        delta1 = 1.0
        low = float(np.min(np.abs(nonzero))) if nonzero.size else np.inf
        if low < 2.0:
            scale = low / 2.0
            powers = scale ** np.arange(poly.shape[0])
            poly = poly * powers[:, None]
            disc = discriminant_x(poly)
            logger.info(f"rescaled x -> {scale:.6g} x so that far branch points leave the unit disc")
    else:
        delta1 = float(delta1)
        stray = [z for z in nonzero if delta1 / 2 <= abs(z) < delta1]
        if stray:
            raise InputError(f"branch point {stray[0]:.6g} lies in the annulus of delta1 = {delta1}")
    top = _max_fiber_root(poly, delta1)
    if delta2 is None:
        delta2 = max(2.1 * top, 1e-3)
    else:
        delta2 = float(delta2)
        if top >= delta2 / 2:
            raise InputError(f"fiber roots reach {top:.6g}, not below delta2/2 = {delta2 / 2:.6g}")
    germ = Germ(poly=poly, d=d, r=r, disc_x=disc, delta1=delta1, delta2=delta2, x_scale=scale)
    logger.info(f"OK: germ of degree {d} with r = {r}")
    return germ


def dimension(germ):
    """r = order of vanishing of the discriminant at x = 0."""
    r = vanishing_order(germ.disc_x)
    if r is None:
        raise DegenerateGerm("the discriminant vanishes identically")
    return r


def germ_from_json(obj):
    try:
        terms = [(int(t[0]), int(t[1]), complex(t[2], t[3] if len(t) > 3 else 0.0)) for t in obj["terms"]]
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise InputError(f"germ JSON needs 'terms' as [[a, b, re, im], ...]: {e}")
    return normalize_germ(terms, obj.get("delta1"), obj.get("delta2"))


if __name__ == "__main__":
    g = normalize_germ([(0, 3, 1.0), (2, 0, -1.0)])
    print(f"[OK] y^3 - x^2: d = {g.d}, r = {g.r}, disc = {g.disc_x.real}")
