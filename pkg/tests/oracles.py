"""Independent reference code for the tests.

Nothing here imports scatterlab.  Series are dicts ``(p1, p2, j) -> Fraction``
truncated at ``t^N``; wall crossings are the ring automorphisms
``z^p -> z^p f^(s <p, n>)`` composed directly on the generators.
"""

import math
from fractions import Fraction


def mul(a, b, N):
    out = {}
    for (p1, p2, j), c in a.items():
        for (q1, q2, k), d in b.items():
            if j + k > N:
                continue
            key = (p1 + q1, p2 + q2, j + k)
            out[key] = out.get(key, 0) + c * d
    return {k: v for k, v in out.items() if v}


def one():
    return {(0, 0, 0): Fraction(1)}


def power(f, e, N):
    """``f**e`` for integer ``e`` and ``f = 1 + O(t)``."""
    if e < 0:
        g = {k: -v for k, v in f.items() if k != (0, 0, 0)}
        inv, term = one(), one()
        for _ in range(N):
            term = mul(term, g, N)
            inv = {k: inv.get(k, 0) + term.get(k, 0) for k in set(inv) | set(term)}
        f, e = {k: v for k, v in inv.items() if v}, -e
    out = one()
    for _ in range(e):
        out = mul(out, f, N)
    return out


def crossing(f, n, sign, N):
    """Ring automorphism ``z^p -> z^p f^(sign <p, n>)`` as a callable on series."""
    cache = {}

    def act(series):
        out = {}
        for (p1, p2, j), c in series.items():
            e = sign * (p1 * n[0] + p2 * n[1])
            if e not in cache:
                cache[e] = power(f, e, N)
            for (q1, q2, k), d in cache[e].items():
                if j + k > N:
                    continue
                key = (p1 + q1, p2 + q2, j + k)
                out[key] = out.get(key, 0) + c * d
        return {k: v for k, v in out.items() if v}

    return act


def loop_is_identity(walls, N, start=math.pi / 4 + 1e-3):
    """``walls``: list of ``(m, f, support)`` with support 'line' or 'ray'.

    Runs anticlockwise from ``start``; a crossing of the half-line with
    direction ``v`` uses exponent sign ``-sign<m, v>``; the normal is
    ``(-m2, m1)``.  Returns True when the composite fixes both generators.
    """
    events = []
    for m, f, support in walls:
        halves = [(-m[0], -m[1])] if support == "ray" else [m, (-m[0], -m[1])]
        for v in halves:
            ang = (math.atan2(v[1], v[0]) - start) % (2 * math.pi)
            s = -1 if m[0] * v[0] + m[1] * v[1] > 0 else 1
            events.append((ang, crossing(f, (-m[1], m[0]), s, N)))
    events.sort(key=lambda e: e[0])
    for gen in ((1, 0, 0), (0, 1, 0)):
        x = {gen: Fraction(1)}
        for _, act in events:  # first crossing acts first
            x = act(x)
        if x != {gen: Fraction(1)}:
            return False
    return True


def binomial_series(m, j, coeff, exponent, N):
    """``(1 + coeff t^j z^m)^exponent`` truncated at ``t^N``."""
    base = {(0, 0, 0): Fraction(1), (m[0], m[1], j): Fraction(coeff)}
    return power(base, exponent, N)


def exp_series(log, N):
    """``exp`` of a series without constant term."""
    out, term = one(), one()
    for k in range(1, N + 1):
        term = {key: v / k for key, v in mul(term, log, N).items()}
        if not term:
            break
        for key, v in term.items():
            out[key] = out.get(key, 0) + v
    return {k: v for k, v in out.items() if v}


def log1p_coefficients(c, N):
    """Coefficients of ``log(1 + c u)`` in ``u`` up to ``u^N``."""
    return [Fraction((-1) ** (k + 1), k) * Fraction(c) ** k for k in range(1, N + 1)]
