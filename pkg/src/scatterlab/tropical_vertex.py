"""The tropical vertex Lie algebra and its exponential group.

Elements are finite sums of ``z^m t^j d_v`` where ``v`` is a rational dual
vector with ``<m, v> = 0``.  Terms sharing ``(m, j)`` are merged by adding
their ``v`` (the bracket is linear in ``v``), so an element is a map
``(m, j) -> v``.  The bracket is

    [z^m d_n, z^m' d_n'] = z^(m+m') d_((m',n) n' - (m,n') n)

and ``exp`` of an element acts on series as the exponential of the
derivation ``z^p -> <p, v> z^(p+m) t^j``.
"""

from functools import lru_cache
from math import factorial

from . import kernels
from .kernels import MASK, pack, unpack
from .lattice_algebra import (
    ONE,
    ZERO,
    Q,
    TruncatedSeries,
    as_rational,
    pairing,
    primitive_part,
    rational_from_json,
    rational_to_json,
)


def normal_of(m):
    """Primitive dual vector annihilating ``m``: ``(-b, a)`` for ``m0 = (a, b)``."""
    (a, b), _ = primitive_part(m)
    return (-b, a)


class LieElement:
    """Element of h tensored with the maximal ideal, truncated at t^order."""

    __slots__ = ("order", "_d")

    def __init__(self, order, terms=None):
        self.order = int(order)
        if self.order < 1:
            raise ValueError("Lie elements need truncation order >= 1")
        d = {}
        for (m, j), v in (terms.items() if hasattr(terms, "items") else (terms or ())):
            m = (int(m[0]), int(m[1]))
            j = int(j)
            if m == (0, 0):
                raise ValueError("Lie terms need a nonzero mode")
            if j < 1:
                raise ValueError(f"Lie term at z^{m} has t-order {j}; need j >= 1")
            v = (as_rational(v[0]), as_rational(v[1]))
            if pairing(m, v):
                raise ValueError(f"term z^{m} d_{v}: <m, n> = {pairing(m, v)} is not zero")
            if j > self.order:
                continue
            k = pack(m[0], m[1], j)
            if k in d:
                u = d[k]
                v = (u[0] + v[0], u[1] + v[1])
            d[k] = v
        self._d = {k: v for k, v in d.items() if v[0] or v[1]}

    @classmethod
    def _raw(cls, order, d):
        x = cls.__new__(cls)
        x.order = order
        x._d = d
        return x

    @classmethod
    def zero(cls, order):
        return cls._raw(order, {})

    @classmethod
    def term(cls, coeff, m, n, j, order):
        c = as_rational(coeff)
        return cls(order, {(tuple(m), j): (c * n[0], c * n[1])})

    @classmethod
    def from_series(cls, f, n):
        """``f * d_n`` for a series ``f`` without constant part."""
        d = {}
        for m, j, c in f.items():
            if pairing(m, n):
                raise ValueError(f"mode {m} is not annihilated by {n}")
            if j < 1 or m == (0, 0):
                raise ValueError(f"term {c}*z^{m}*t^{j} is not in the Lie algebra")
            d[(m, j)] = (c * n[0], c * n[1])
        return cls(f.order, d)

    # views
    def items(self):
        """Terms as ``((m1, m2), j, (v1, v2))`` sorted by ``(j, m)``."""
        out = []
        for k, v in self._d.items():
            m1, m2, j = unpack(k)
            out.append(((m1, m2), j, v))
        out.sort(key=lambda t: (t[1], t[0]))
        return out

    @property
    def terms(self):
        return {(m, j): v for m, j, v in self.items()}

    def coeff_along(self, m, j, n):
        """Rational ``c`` with ``v = c * n`` at ``(m, j)`` (zero if absent)."""
        v = self._d.get(pack(m[0], m[1], j))
        if v is None:
            return ZERO
        i = 0 if n[0] else 1
        c = v[i] / n[i]
        if (c * n[0], c * n[1]) != v:
            raise ValueError(f"payload {v} at z^{m} t^{j} is not a multiple of {n}")
        return c

    def is_zero(self):
        return not self._d

    def __len__(self):
        return len(self._d)

    def min_order(self):
        return min((k & MASK for k in self._d), default=None)

    # arithmetic
    def _same(self, other):
        if not isinstance(other, LieElement):
            raise TypeError("expected a LieElement")
        if other.order != self.order:
            raise ValueError(f"truncation orders differ: {self.order} vs {other.order}")

    def __add__(self, other):
        self._same(other)
        d = dict(self._d)
        for k, (b1, b2) in other._d.items():
            if k in d:
                a1, a2 = d[k]
                w = (a1 + b1, a2 + b2)
                if w[0] or w[1]:
                    d[k] = w
                else:
                    del d[k]
            else:
                d[k] = (b1, b2)
        return LieElement._raw(self.order, d)

    def __neg__(self):
        return LieElement._raw(self.order, {k: (-a, -b) for k, (a, b) in self._d.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = as_rational(c)
        if not c:
            return LieElement.zero(self.order)
        return LieElement._raw(self.order, {k: (a * c, b * c) for k, (a, b) in self._d.items()})

    __rmul__ = scale

    def __eq__(self, other):
        if not isinstance(other, LieElement):
            return NotImplemented
        return self.order == other.order and self._d == other._d

    def __hash__(self):
        return hash((self.order, frozenset(self._d.items())))

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot raise the truncation order")
        return LieElement._raw(order, {k: v for k, v in self._d.items() if (k & MASK) <= order})

    def with_order(self, order):
        """Same terms viewed at another truncation order (dropping terms above it)."""
        return LieElement._raw(order, {k: v for k, v in self._d.items() if (k & MASK) <= order})

    def derivation_terms(self):
        return [(k, a, b) for k, (a, b) in self._d.items()]

    def __repr__(self):
        if not self._d:
            return f"LieElement(order={self.order}, 0)"
        parts = [f"z^{m}*t^{j}*d({v[0]}, {v[1]})" for m, j, v in self.items()]
        return f"LieElement(order={self.order}, " + " + ".join(parts) + ")"

    # json
    def to_json(self):
        terms = []
        for m, j, v in self.items():
            n = normal_of(m)
            c = v[0] / n[0] if n[0] else v[1] / n[1]
            terms.append(
                {
                    "coeff": rational_to_json(c),
                    "m": [m[0], m[1]],
                    "n": [rational_to_json(Q(n[0])), rational_to_json(Q(n[1]))],
                    "j": j,
                }
            )
        return {"order": self.order, "terms": terms}

    @classmethod
    def from_json(cls, obj):
        try:
            order = int(obj["order"])
            items = []
            for t in obj["terms"]:
                c = rational_from_json(t["coeff"])
                n = [rational_from_json(x) for x in t["n"]]
                m = tuple(int(x) for x in t["m"])
                if len(m) != 2 or len(n) != 2:
                    raise ValueError("vectors must have two coordinates")
                items.append(((m, int(t["j"])), (c * n[0], c * n[1])))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed Lie element JSON: {exc}") from exc
        return cls(order, items)


class GroupElement:
    """``exp(log)``; stored by its logarithm."""

    __slots__ = ("log",)

    def __init__(self, log):
        if not isinstance(log, LieElement):
            raise TypeError("GroupElement wraps a LieElement")
        self.log = log

    @classmethod
    def identity(cls, order):
        return cls(LieElement.zero(order))

    @property
    def order(self):
        return self.log.order

    def inverse(self):
        return GroupElement(-self.log)

    def __mul__(self, other):
        return GroupElement(bch(self.log, other.log))

    def __call__(self, f):
        return apply_automorphism(self, f)

    def __repr__(self):
        return f"exp({self.log!r})"


def bracket(x, y):
    x._same(y)
    return LieElement._raw(x.order, kernels.lie_bracket(x._d, y._d, x.order))


def apply_derivation(x, f):
    if f.order != x.order:
        raise ValueError(f"truncation orders differ: {x.order} vs {f.order}")
    return TruncatedSeries._raw(f.order, kernels.derivation_apply(f._d, x.derivation_terms(), f.order))


def apply_automorphism(g, f):
    """``exp(D) f``; the sum stops once D^k f vanishes."""
    x = g.log if isinstance(g, GroupElement) else g
    if f.order != x.order:
        raise ValueError(f"truncation orders differ: {x.order} vs {f.order}")
    dterms = x.derivation_terms()
    if not dterms:
        return f
    out = dict(f._d)
    cur = f._d
    for k in range(1, f.order + 1):
        cur = kernels.derivation_apply(cur, dterms, f.order)
        if not cur:
            break
        w = Q(1, k)
        cur = {key: c * w for key, c in cur.items()}
        for key, c in cur.items():
            v = out.get(key, ZERO) + c
            if v:
                out[key] = v
            else:
                out.pop(key, None)
    return TruncatedSeries._raw(f.order, out)


# -- Baker-Campbell-Hausdorff --------------------------------------------


def _free_mul(a, b, maxlen):
    out = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            if len(wa) + len(wb) > maxlen:
                continue
            w = wa + wb
            out[w] = out.get(w, 0) + ca * cb
    return {w: c for w, c in out.items() if c}


@lru_cache(maxsize=None)
def bch_word_coefficients(maxlen):
    """Coefficients of log(e^X e^Y) in the free algebra, Dynkin-normalised.

    Returns ``{word: c}`` such that ``Z = sum c * [[[w1, w2], w3], ...]`` with
    letters 0 = X and 1 = Y.  The ``1/len(w)`` of the Dynkin-Specht-Wever
    projection is already folded into ``c``.
    """
    from fractions import Fraction

    e = {}
    for p in range(maxlen + 1):
        for q in range(maxlen + 1 - p):
            if p + q == 0:
                continue
            e[(0,) * p + (1,) * q] = Fraction(1, factorial(p) * factorial(q))
    log = {}
    power = dict(e)
    for n in range(1, maxlen + 1):
        sgn = Fraction((-1) ** (n + 1), n)
        for w, c in power.items():
            log[w] = log.get(w, 0) + sgn * c
        power = _free_mul(power, e, maxlen)
        if not power:
            break
    return {w: c / len(w) for w, c in sorted(log.items()) if c}


def bch(x, y):
    """Element z with exp(z) = exp(x) o exp(y) as automorphisms."""
    x._same(y)
    if x.is_zero():
        return y
    if y.is_zero():
        return x
    order = x.order
    lx, ly = x.min_order(), y.min_order()
    # words longer than this cannot survive truncation
    maxlen = order // min(lx, ly)
    coeffs = bch_word_coefficients(maxlen)
    letters = (x, y)
    lowest = (lx, ly)
    total = {}

    # walk the prefix trie of left-normed brackets
    trie = {}
    for w, c in coeffs.items():
        node = trie
        for a in w:
            node = node.setdefault(a, {})
        node[None] = c

    def accumulate(elem, c):
        for k, (a, b) in elem._d.items():
            if k in total:
                u = total[k]
                total[k] = (u[0] + c * a, u[1] + c * b)
            else:
                total[k] = (c * a, c * b)

    def walk(node, elem, low):
        c = node.get(None)
        if c:
            accumulate(elem, Q(c))
        for a, child in node.items():
            if a is None:
                continue
            if low + lowest[a] > order:
                continue
            nxt = bracket(elem, letters[a])
            if nxt.is_zero():
                continue
            walk(child, nxt, nxt.min_order())

    for a in (0, 1):
        if a in trie:
            walk(trie[a], letters[a], lowest[a])
    return LieElement._raw(order, {k: v for k, v in total.items() if v[0] or v[1]})


def generator_images(g):
    order = g.order
    xs = TruncatedSeries.monomial((1, 0), 0, 1, order)
    ys = TruncatedSeries.monomial((0, 1), 0, 1, order)
    return apply_automorphism(g, xs), apply_automorphism(g, ys)


def group_equal(g1, g2):
    if g1.order != g2.order:
        raise ValueError(f"truncation orders differ: {g1.order} vs {g2.order}")
    return generator_images(g1) == generator_images(g2)


def compose(*gs):
    """Group product ``gs[0] * gs[1] * ...`` (rightmost acts first)."""
    out = gs[0].log
    for g in gs[1:]:
        out = bch(out, g.log)
    return GroupElement(out)


__all__ = [
    "LieElement",
    "GroupElement",
    "bracket",
    "apply_automorphism",
    "apply_derivation",
    "bch",
    "group_equal",
    "generator_images",
    "compose",
    "normal_of",
    "bch_word_coefficients",
    "ONE",
]
