"""Pure-Python versions of the inner loops.

Series and Lie elements are stored as dicts keyed by packed integers
``(m1 * W + m2) * W + j`` with ``W = 2**20``.  Packing is linear, so the key
of a product monomial is the sum of the keys.  The compiled module
``_ckernels`` exposes the same functions with the same signatures.
"""

import numpy as np

SHIFT = 20
W = 1 << SHIFT
MASK = W - 1
HALF = W >> 1


def unpack(key):
    j = key & MASK
    r = key >> SHIFT
    m2 = ((r + HALF) & MASK) - HALF
    m1 = (r - m2) >> SHIFT
    return m1, m2, j


def series_mul(a, b, order):
    out = {}
    get = out.get
    for ka, ca in a.items():
        ja = ka & MASK
        if ja > order:
            continue
        lim = order - ja
        for kb, cb in b.items():
            if (kb & MASK) > lim:
                continue
            k = ka + kb
            out[k] = get(k, 0) + ca * cb
    return {k: c for k, c in out.items() if c}


def derivation_apply(f, dterms, order):
    """Apply the derivation z^p -> <p, v> z^{p+m} t^j termwise.

    ``dterms`` is a list of ``(key, v1, v2)``.
    """
    out = {}
    get = out.get
    for kp, c in f.items():
        p1, p2, jp = unpack(kp)
        lim = order - jp
        if lim < 1:
            continue
        for kd, v1, v2 in dterms:
            if (kd & MASK) > lim:
                continue
            w = p1 * v1 + p2 * v2
            if not w:
                continue
            k = kp + kd
            out[k] = get(k, 0) + c * w
    return {k: c for k, c in out.items() if c}


def lie_bracket(x, y, order):
    """Bracket on dicts key -> (v1, v2) using the tropical vertex formula."""
    out = {}
    ys = [(ky, unpack(ky), vy) for ky, vy in y.items()]
    for kx, (a1, a2) in x.items():
        m1, m2, jx = unpack(kx)
        lim = order - jx
        for ky, (n1, n2, jy), (b1, b2) in ys:
            if jy > lim:
                continue
            s = n1 * a1 + n2 * a2  # (m', n)
            r = m1 * b1 + m2 * b2  # (m, n')
            if not s and not r:
                continue
            w1 = s * b1 - r * a1
            w2 = s * b2 - r * a2
            if not w1 and not w2:
                continue
            k = kx + ky
            if k in out:
                u1, u2 = out[k]
                out[k] = (u1 + w1, u2 + w2)
            else:
                out[k] = (w1, w2)
    return {k: v for k, v in out.items() if v[0] or v[1]}


def orthant_count(samples, transform):
    """Count rows z of ``samples`` with ``transform @ z >= 0`` componentwise."""
    w = samples @ transform.T
    return int(np.count_nonzero((w >= 0.0).all(axis=1)))
