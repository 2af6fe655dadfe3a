"""Rank-2 lattice helpers and sparse truncated series with exact coefficients.

A series is a finite sum of ``c * z^m * t^j`` with ``m`` in Z^2 (any sign),
``0 <= j <= N`` and ``c`` rational.  Everything is computed modulo t^{N+1}.
"""

from fractions import Fraction
from math import gcd

from . import kernels
from .kernels import MASK, pack, unpack

try:  # gmpy2 rationals are an order of magnitude faster than Fraction
    from gmpy2 import mpq as _mpq

    def Q(num, den=1):
        """Exact rational constructor used throughout the package."""
        if isinstance(num, Fraction):
            return _mpq(num.numerator, num.denominator) / den
        return _mpq(num, den)

    RATIONAL_TYPES = (int, Fraction, type(_mpq(0)))
except ImportError:  # pragma: no cover - exercised only without gmpy2

    def Q(num, den=1):
        """Exact rational constructor used throughout the package."""
        return Fraction(num) / den

    RATIONAL_TYPES = (int, Fraction)

ZERO = Q(0)
ONE = Q(1)
_LIMIT = 1 << 18


def as_rational(x):
    if isinstance(x, float):
        raise TypeError(f"float coefficient {x!r} not allowed; pass an exact rational")
    if isinstance(x, str):
        return Q(Fraction(x))
    return Q(x)


def rational_to_json(c):
    return {"num": str(int(c.numerator)), "den": str(int(c.denominator))}


def rational_from_json(obj):
    return Q(int(obj["num"]), int(obj["den"]))


# -- lattice --------------------------------------------------------------


def pairing(m, n):
    return m[0] * n[0] + m[1] * n[1]


def det(u, v):
    return u[0] * v[1] - u[1] * v[0]


def primitive_part(m):
    """Split ``m`` as ``k * m0`` with ``m0`` primitive and ``k >= 1``."""
    a, b = int(m[0]), int(m[1])
    g = gcd(a, b)
    if g == 0:
        raise ValueError("primitive_part of the zero vector")
    return (a // g, b // g), g


def _check_key(m1, m2, j):
    if abs(m1) >= _LIMIT or abs(m2) >= _LIMIT or j < 0 or j > MASK:
        raise ValueError(f"monomial z^({m1},{m2}) t^{j} outside the supported range")
    return pack(m1, m2, j)


# -- series -----------------------------------------------------------------


class TruncatedSeries:
    """Sparse series modulo t^{order+1} with exact rational coefficients.

    ``terms`` maps ``((m1, m2), j)`` to a rational.  Zero coefficients and
    terms above the truncation order are discarded on construction.
    """

    __slots__ = ("order", "_d")

    def __init__(self, order, terms=None):
        if int(order) < 0:
            raise ValueError("truncation order must be non-negative")
        self.order = int(order)
        d = {}
        if terms:
            items = terms.items() if hasattr(terms, "items") else terms
            for (m, j), c in items:
                if j > self.order:
                    continue
                c = as_rational(c)
                if not c:
                    continue
                k = _check_key(int(m[0]), int(m[1]), int(j))
                d[k] = d.get(k, ZERO) + c
        self._d = {k: c for k, c in d.items() if c}

    @classmethod
    def _raw(cls, order, d):
        s = cls.__new__(cls)
        s.order = order
        s._d = d
        return s

    @classmethod
    def zero(cls, order):
        return cls._raw(order, {})

    @classmethod
    def one(cls, order):
        return cls._raw(order, {0: ONE})

    @classmethod
    def monomial(cls, m, j=0, coeff=1, order=1):
        return cls(order, {(tuple(m), j): coeff})

    # views
    def items(self):
        """Terms as ``((m1, m2), j, c)`` sorted by ``(j, m)``."""
        out = []
        for k, c in self._d.items():
            m1, m2, j = unpack(k)
            out.append(((m1, m2), j, c))
        out.sort(key=lambda t: (t[1], t[0]))
        return out

    @property
    def terms(self):
        return {(m, j): c for m, j, c in self.items()}

    def coeff(self, m, j):
        return self._d.get(pack(m[0], m[1], j), ZERO)

    def is_zero(self):
        return not self._d

    def __len__(self):
        return len(self._d)

    # arithmetic
    def _same(self, other):
        if not isinstance(other, TruncatedSeries):
            raise TypeError("expected a TruncatedSeries")
        if other.order != self.order:
            raise ValueError(f"truncation orders differ: {self.order} vs {other.order}")

    def __add__(self, other):
        self._same(other)
        d = dict(self._d)
        for k, c in other._d.items():
            v = d.get(k, ZERO) + c
            if v:
                d[k] = v
            else:
                d.pop(k, None)
        return TruncatedSeries._raw(self.order, d)

    def __neg__(self):
        return TruncatedSeries._raw(self.order, {k: -c for k, c in self._d.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = as_rational(c)
        if not c:
            return TruncatedSeries.zero(self.order)
        return TruncatedSeries._raw(self.order, {k: v * c for k, v in self._d.items()})

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            self._same(other)
            return TruncatedSeries._raw(self.order, kernels.series_mul(self._d, other._d, self.order))
        return self.scale(other)

    __rmul__ = scale

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.order == other.order and self._d == other._d

    def __hash__(self):
        return hash((self.order, frozenset(self._d.items())))

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot raise the truncation order")
        return TruncatedSeries._raw(order, {k: c for k, c in self._d.items() if (k & MASK) <= order})

    def __repr__(self):
        if not self._d:
            return f"TruncatedSeries(order={self.order}, 0)"
        parts = []
        for m, j, c in self.items():
            parts.append(f"{c}*z^{m}*t^{j}")
        return f"TruncatedSeries(order={self.order}, " + " + ".join(parts) + ")"

    # json
    def to_json(self):
        return {
            "order": self.order,
            "terms": [
                {"m": [m[0], m[1]], "j": j, **rational_to_json(c)} for m, j, c in self.items()
            ],
        }

    @classmethod
    def from_json(cls, obj):
        try:
            order = int(obj["order"])
            terms = [
                ((tuple(int(x) for x in t["m"]), int(t["j"])), Q(int(t["num"]), int(t["den"])))
                for t in obj["terms"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed series JSON: {exc}") from exc
        for (m, _), _c in terms:
            if len(m) != 2:
                raise ValueError("series exponents must have two coordinates")
        return cls(order, terms)


def series_add(a, b):
    return a + b


def series_mul(a, b):
    return a * b


def _split_unit(f, what):
    if f.coeff((0, 0), 0) != 1:
        raise ValueError(f"{what} needs constant term 1, got {f.coeff((0, 0), 0)}")
    for m, j, c in f.items():
        if j == 0 and m != (0, 0):
            raise ValueError(f"{what} needs every non-constant term to carry t; offending term {c}*z^{m}")
    return f - TruncatedSeries.one(f.order)


def series_exp(a):
    for m, j, c in a.items():
        if j < 1:
            raise ValueError(f"exp needs every term to carry t; offending term {c}*z^{m}*t^{j}")
    out = TruncatedSeries.one(a.order)
    term = out
    for k in range(1, a.order + 1):
        term = (term * a).scale(Q(1, k))
        if term.is_zero():
            break
        out = out + term
    return out


def series_log(f):
    g = _split_unit(f, "log")
    out = TruncatedSeries.zero(f.order)
    power = g
    for k in range(1, f.order + 1):
        if power.is_zero():
            break
        out = out + power.scale(Q((-1) ** (k + 1), k))
        power = power * g
    return out


def series_inv(f):
    g = -_split_unit(f, "inv")
    out = TruncatedSeries.one(f.order)
    power = out
    for _ in range(f.order):
        power = power * g
        if power.is_zero():
            break
        out = out + power
    return out
