# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the inner loops in ``_kernels_py``.

Keys are handled as 64-bit integers; coefficients stay Python objects so
exact rationals pass through unchanged.
"""

import numpy as np

cdef long long SHIFT = 20
cdef long long W = 1 << 20
cdef long long MASK = (1 << 20) - 1
cdef long long HALF = 1 << 19


cdef inline void _unpack(long long key, long long *m1, long long *m2, long long *j):
    cdef long long r
    j[0] = key & MASK
    r = key >> SHIFT
    m2[0] = ((r + HALF) & MASK) - HALF
    m1[0] = (r - m2[0]) >> SHIFT


def series_mul(dict a, dict b, long long order):
    cdef dict out = {}
    cdef long long ka, kb, k, ja, lim
    cdef Py_ssize_t i, nb
    cdef list bk = list(b.keys())
    cdef list bv = list(b.values())
    nb = len(bk)
    for pa, ca in a.items():
        ka = pa
        ja = ka & MASK
        if ja > order:
            continue
        lim = order - ja
        for i in range(nb):
            kb = bk[i]
            if (kb & MASK) > lim:
                continue
            k = ka + kb
            prev = out.get(k)
            if prev is None:
                out[k] = ca * bv[i]
            else:
                out[k] = prev + ca * bv[i]
    return {k2: c for k2, c in out.items() if c}


def derivation_apply(dict f, list dterms, long long order):
    cdef dict out = {}
    cdef long long kp, kd, k, p1, p2, jp, lim
    cdef Py_ssize_t i, nd = len(dterms)
    cdef list keys = [t[0] for t in dterms]
    cdef list v1s = [t[1] for t in dterms]
    cdef list v2s = [t[2] for t in dterms]
    for pk, c in f.items():
        kp = pk
        _unpack(kp, &p1, &p2, &jp)
        lim = order - jp
        if lim < 1:
            continue
        for i in range(nd):
            kd = keys[i]
            if (kd & MASK) > lim:
                continue
            w = p1 * v1s[i] + p2 * v2s[i]
            if not w:
                continue
            k = kp + kd
            prev = out.get(k)
            if prev is None:
                out[k] = c * w
            else:
                out[k] = prev + c * w
    return {k2: c2 for k2, c2 in out.items() if c2}


def lie_bracket(dict x, dict y, long long order):
    cdef dict out = {}
    cdef long long kx, ky, k, m1, m2, jx, n1, n2, jy, lim
    cdef list ys = []
    cdef Py_ssize_t i, ny
    for pk, v in y.items():
        ky = pk
        _unpack(ky, &n1, &n2, &jy)
        ys.append((ky, n1, n2, jy, v[0], v[1]))
    ny = len(ys)
    for pk, v in x.items():
        kx = pk
        a1, a2 = v
        _unpack(kx, &m1, &m2, &jx)
        lim = order - jx
        for i in range(ny):
            ky, n1, n2, jy, b1, b2 = ys[i]
            if jy > lim:
                continue
            s = n1 * a1 + n2 * a2
            r = m1 * b1 + m2 * b2
            if not s and not r:
                continue
            w1 = s * b1 - r * a1
            w2 = s * b2 - r * a2
            if not w1 and not w2:
                continue
            k = kx + ky
            prev = out.get(k)
            if prev is None:
                out[k] = (w1, w2)
            else:
                out[k] = (prev[0] + w1, prev[1] + w2)
    return {k2: v2 for k2, v2 in out.items() if v2[0] or v2[1]}


def orthant_count(samples, transform):
    cdef double[:, :] z = np.ascontiguousarray(samples, dtype=np.float64)
    cdef double[:, :] t = np.ascontiguousarray(transform, dtype=np.float64)
    cdef Py_ssize_t n = z.shape[0], d = z.shape[1], r = t.shape[0]
    cdef Py_ssize_t i, a, b
    cdef long long count = 0
    cdef double acc
    cdef bint ok
    for i in range(n):
        ok = True
        for a in range(r):
            acc = 0.0
            for b in range(d):
                acc += t[a, b] * z[i, b]
            if acc < 0.0:
                ok = False
                break
        if ok:
            count += 1
    return int(count)
