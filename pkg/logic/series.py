"""Truncated Laurent series in x and polynomials in y over them.

Everything the exact (jet-level) side of germdeform computes goes through
these two types.  A TruncSeries knows its coefficients for exponents
``valuation .. order-1``; exponents at or above ``order`` are unknown, never zero.
"""
from dataclasses import dataclass

import numpy as np
import numpy.polynomial.polynomial as npoly

from logic.config import EPS_VAL, get_logger
from logic.errors import InputError, NoContraction, TruncationUnstable, ZeroLeadingCoefficient

logger = get_logger(__name__)


class TruncSeries:
    __slots__ = ("valuation", "coeffs", "order")

    def __init__(self, valuation, coeffs, order):
        valuation = int(valuation)
        order = int(order)
        n = order - valuation
        if n <= 0:
            arr = np.zeros(0, dtype=complex)
            valuation = order
        else:
            src = np.asarray(coeffs, dtype=complex).ravel()[:n]
            arr = np.zeros(n, dtype=complex)
            arr[: src.size] = src
        arr.setflags(write=False)
        object.__setattr__(self, "valuation", valuation)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "order", order)

    def __setattr__(self, name, value):
        raise AttributeError("TruncSeries is immutable")

    # constructors

    @classmethod
    def zero(cls, order):
        return cls(order, (), order)

    @classmethod
    def one(cls, order):
        return cls(0, (1.0,), order)

    @classmethod
    def constant(cls, c, order):
        return cls(0, (c,), order)

    @classmethod
    def monomial(cls, k, order, c=1.0):
        return cls(k, (c,), order)

    @classmethod
    def from_poly(cls, coeffs, order):
        """Series of a polynomial given low-to-high, truncated at ``order``."""
        return cls(0, coeffs, order)

    @classmethod
    def from_dict(cls, terms, order):
        if not terms:
            return cls.zero(order)
        low = min(terms)
        arr = np.zeros(max(order - low, 0), dtype=complex)
        for k, c in terms.items():
            if k < order:
                arr[k - low] += c
        return cls(low, arr, order)

    # inspection

    def coeff(self, k):
        if k >= self.order:
            raise ValueError(f"coefficient of x^{k} is beyond the truncation order {self.order}")
        if k < self.valuation:
            return 0j
        return complex(self.coeffs[k - self.valuation])

    def is_zero(self, eps=0.0):
        return self.coeffs.size == 0 or bool(np.all(np.abs(self.coeffs) <= eps))

    def effective_valuation(self, eps=EPS_VAL):
        """Lowest exponent with a coefficient above ``eps``; None if none is known."""
        big = np.nonzero(np.abs(self.coeffs) > eps)[0]
        if big.size == 0:
            return None
        return self.valuation + int(big[0])

    def normalized(self, eps=EPS_VAL):
        v = self.effective_valuation(eps)
        if v is None:
            return TruncSeries.zero(self.order)
        return TruncSeries(v, self.coeffs[v - self.valuation:], self.order)

    @property
    def leading(self):
        return complex(self.coeffs[0]) if self.coeffs.size else 0j

    def dense(self, low, high):
        """Coefficients for exponents low..high-1 (zeros below the valuation)."""
        if high > self.order:
            raise ValueError(f"exponent {high - 1} is beyond the truncation order {self.order}")
        out = np.zeros(max(high - low, 0), dtype=complex)
        for k in range(max(low, self.valuation), high):
            out[k - low] = self.coeffs[k - self.valuation]
        return out

    def evaluate(self, x):
        x = np.asarray(x, dtype=complex)
        if self.coeffs.size == 0:
            return np.zeros_like(x)
        return npoly.polyval(x, self.coeffs) * x ** self.valuation

    def max_abs_diff(self, other):
        """Largest coefficient difference on the exponents both series know."""
        high = min(self.order, other.order)
        low = min(self.valuation, other.valuation, high)
        if high <= low:
            return 0.0
        diff = self.dense(low, high) - other.dense(low, high)
        return float(np.max(np.abs(diff))) if diff.size else 0.0

    # arithmetic

    def _coerce(self, other):
        if isinstance(other, TruncSeries):
            return other
        return TruncSeries.constant(other, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        order = min(self.order, other.order)
        v = min(self.valuation, other.valuation)
        if order <= v:
            return TruncSeries.zero(order)
        arr = np.zeros(order - v, dtype=complex)
        for s in (self, other):
            n = order - s.valuation
            if n > 0:
                arr[s.valuation - v:] += s.coeffs[:n]
        return TruncSeries(v, arr, order)

    __radd__ = __add__

    def __neg__(self):
        return TruncSeries(self.valuation, -self.coeffs, self.order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncSeries):
            return TruncSeries(self.valuation, self.coeffs * complex(other), self.order)
        v = self.valuation + other.valuation
        order = min(self.order + other.valuation, other.order + self.valuation)
        n = order - v
        if n <= 0 or self.coeffs.size == 0 or other.coeffs.size == 0:
            return TruncSeries.zero(max(order, v))
        return TruncSeries(v, np.convolve(self.coeffs, other.coeffs)[:n], order)

    __rmul__ = __mul__

    def shift(self, k):
        """Multiply by x^k."""
        return TruncSeries(self.valuation + k, self.coeffs, self.order + k)

    def truncate(self, order):
        return TruncSeries(self.valuation, self.coeffs, min(order, self.order))

    def inv(self, eps=EPS_VAL):
        if self.coeffs.size == 0 or abs(self.coeffs[0]) <= eps:
            raise ZeroLeadingCoefficient(
                f"leading coefficient {self.leading} of a series with valuation {self.valuation} is zero")
        c = self.coeffs
        n = c.size
        b = np.zeros(n, dtype=complex)
        b[0] = 1.0 / c[0]
        for k in range(1, n):
            b[k] = -np.dot(c[1:k + 1], b[k - 1::-1]) / c[0]
        return TruncSeries(-self.valuation, b, n - self.valuation)

    def __repr__(self):
        terms = ", ".join(f"x^{self.valuation + i}:{c:.6g}" for i, c in enumerate(self.coeffs) if c != 0)
        return f"TruncSeries({terms or '0'}; O(x^{self.order}))"


def series_mul(a, b):
    return a * b


def series_inv(a, eps=EPS_VAL):
    return a.inv(eps)


class YPolySeries:
    """Polynomial in y whose coefficient of y^k is ``coeffs[k]`` (a TruncSeries)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise InputError("a y-polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("YPolySeries is immutable")

    @classmethod
    def from_array(cls, arr, order):
        """``arr[a, b]`` is the coefficient of x^a y^b."""
        arr = np.atleast_2d(np.asarray(arr, dtype=complex))
        return cls(TruncSeries.from_poly(arr[:, b], order) for b in range(arr.shape[1]))

    @classmethod
    def from_terms(cls, terms, order):
        """``terms`` is an iterable of (a, b, coefficient)."""
        terms = list(terms)
        degree = max((b for _, b, _ in terms), default=0)
        per_power = [dict() for _ in range(degree + 1)]
        for a, b, c in terms:
            per_power[b][a] = per_power[b].get(a, 0) + c
        return cls(TruncSeries.from_dict(t, order) for t in per_power)

    @classmethod
    def monomial(cls, a, b, order, c=1.0):
        zero = TruncSeries.zero(order)
        return cls([zero] * b + [TruncSeries.monomial(a, order, c)])

    @classmethod
    def y(cls, order):
        return cls.monomial(0, 1, order)

    @classmethod
    def constant(cls, series):
        return cls((series,))

    @property
    def degree_bound(self):
        return len(self.coeffs)

    @property
    def order(self):
        return min(c.order for c in self.coeffs)

    def coeff(self, k):
        if k < len(self.coeffs):
            return self.coeffs[k]
        return TruncSeries.zero(self.order)

    def padded(self, n):
        if len(self.coeffs) >= n:
            return self
        zero = TruncSeries.zero(self.order)
        return YPolySeries(self.coeffs + (zero,) * (n - len(self.coeffs)))

    def trim(self, eps=0.0):
        coeffs = list(self.coeffs)
        while len(coeffs) > 1 and coeffs[-1].is_zero(eps):
            coeffs.pop()
        return YPolySeries(coeffs)

    def is_monic(self, eps=EPS_VAL):
        top = self.coeffs[-1]
        return (top - 1.0).is_zero(eps)

    def max_abs(self):
        return max((float(np.max(np.abs(c.coeffs))) if c.coeffs.size else 0.0) for c in self.coeffs)

    def max_abs_diff(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return max(self.coeff(k).max_abs_diff(other.coeff(k)) for k in range(n))

    def __add__(self, other):
        if not isinstance(other, YPolySeries):
            other = YPolySeries.constant(self.coeffs[0]._coerce(other))
        n = max(len(self.coeffs), len(other.coeffs))
        a, b = self.padded(n), other.padded(n)
        return YPolySeries(x + y for x, y in zip(a.coeffs, b.coeffs))

    __radd__ = __add__

    def __neg__(self):
        return YPolySeries(-c for c in self.coeffs)

    def __sub__(self, other):
        if not isinstance(other, YPolySeries):
            other = YPolySeries.constant(self.coeffs[0]._coerce(other))
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, YPolySeries):
            out = [None] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    term = a * b
                    out[i + j] = term if out[i + j] is None else out[i + j] + term
            return YPolySeries(out)
        return YPolySeries(c * other for c in self.coeffs)

    __rmul__ = __mul__

    def dy(self):
        if len(self.coeffs) == 1:
            return YPolySeries((TruncSeries.zero(self.order),))
        return YPolySeries(c * k for k, c in enumerate(self.coeffs) if k > 0)

    def truncate(self, order):
        return YPolySeries(c.truncate(order) for c in self.coeffs)

    def node_coeffs(self, x):
        """Numeric y-coefficients at the points x, shape (len(x), degree_bound)."""
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        return np.stack([c.evaluate(x) for c in self.coeffs], axis=-1)

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for c in reversed(self.coeffs):
            out = out * y + c.evaluate(x)
        return out

    def __repr__(self):
        return "YPolySeries(" + " + ".join(f"({c!r})*y^{k}" for k, c in enumerate(self.coeffs)) + ")"


def ypoly_reduce(p, m, with_quotient=False):
    """Division with remainder by the monic y-polynomial m; remainder has degree < deg m."""
    d = m.degree_bound - 1
    if d < 1:
        raise InputError("division needs a monic divisor of degree >= 1")
    rem = list(p.padded(d).coeffs)
    n = len(rem)
    quotient = [TruncSeries.zero(p.order) for _ in range(max(n - d, 1))]
    for k in range(n - 1, d - 1, -1):
        lead = rem[k]
        quotient[k - d] = lead
        if not lead.is_zero():
            for j in range(d):
                rem[k - d + j] = rem[k - d + j] - lead * m.coeffs[j]
        rem[k] = TruncSeries.zero(lead.order)
    remainder = YPolySeries(rem[:d])
    if with_quotient:
        return YPolySeries(quotient), remainder
    return remainder


def ypoly_subst(p, u):
    """p(x, u(x, y)) by Horner's rule; no reduction."""
    out = YPolySeries((p.coeffs[-1],))
    for c in reversed(p.coeffs[:-1]):
        out = (out * u) + YPolySeries((c,))
    return out


def contraction_bound(w, radius_x, radius_y):
    """Sup estimate of |d/dy w| on the bidisc for a perturbation w = u - y."""
    total = 0.0
    for k, c in enumerate(w.coeffs):
        if k == 0 or c.coeffs.size == 0:
            continue
        powers = radius_x ** (c.valuation + np.arange(c.coeffs.size))
        total += k * float(np.sum(np.abs(c.coeffs) * powers)) * radius_y ** (k - 1)
    return total


def subst_invert(u, radius_x=None, radius_y=None, eps=EPS_VAL):
    """Inverse v of y -> u(x, y), so that u(x, v(x, y)) = y to truncation.

    Fixed-point iteration v -> y - (u(x, v) - v) started at v = y.
    """
    order = u.order
    y = YPolySeries.y(order)
    w = u - y
    for k, c in enumerate(w.coeffs):
        v = c.effective_valuation(eps)
        if v is not None and v < 1:
            raise NoContraction(f"u - y has a y^{k} coefficient that does not vanish at x = 0")
    if radius_x is not None and radius_y is not None:
        bound = contraction_bound(w, radius_x, radius_y)
        if bound >= 0.5:
            raise NoContraction(f"sup |du/dy - 1| estimate {bound:.3g} is not below 1/2")
    v = y
    for _ in range(order + 2):
        nxt = (y - (ypoly_subst(u, v) - v)).trim()
        delta = (nxt - v).trim(1e-14)
        v = nxt
        if len(delta.coeffs) == 1 and delta.coeffs[0].is_zero(1e-14):
            return v
    raise NoContraction("fixed-point iteration for the inverse substitution did not settle")


def stable_at(compute, order, compare=None, tol=1e-8, bump=4):
    """Run ``compute`` at ``order`` and ``order + bump``; the results must agree."""
    first = compute(order)
    second = compute(order + bump)
    if compare is None:
        diff = float(np.max(np.abs(np.asarray(first) - np.asarray(second)), initial=0.0))
    else:
        diff = compare(first, second)
    if diff > tol:
        raise TruncationUnstable(f"result moved by {diff:.3g} between orders {order} and {order + bump}")
    logger.debug(f"truncation stable at order {order} (change {diff:.2e})")
    return first


@dataclass(frozen=True)
class BiGrid:
    """Samples of a function on |x| = radius_x, one row per node."""
    radius_x: float
    nodes: int
    values: np.ndarray
    radius_y: float = 0.0

    def __post_init__(self):
        m = self.nodes
        if m < 1 or m & (m - 1):
            raise InputError(f"BiGrid node count must be a power of two, got {m}")
        values = np.asarray(self.values, dtype=complex)
        if values.shape[0] != m or not np.all(np.isfinite(values)):
            raise InputError("BiGrid samples must be finite, one row per node")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x_nodes(self):
        return self.radius_x * np.exp(2j * np.pi * np.arange(self.nodes) / self.nodes)


if __name__ == "__main__":
    u = YPolySeries.from_terms([(0, 1, 1.0), (1, 2, 1.0)], 6)
    print(f"[OK] inverse of y + x*y^2: {subst_invert(u)}")
