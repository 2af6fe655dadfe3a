"""Sum over labelled trees with Gaussian cone weights.

Each labelled binary tree with leaves taken from the two input walls gives a
term ``c_T z^{m_T} t^{j_T} d_{n_T}``.  ``m_T`` and ``j_T`` add up over the
leaves and ``n_T`` follows the bracket recursion.  The scalar ``c_T`` is

    weight(T) * prod(leaf coefficients) * (-1)^chi(T) * mu(C_T)

where ``mu`` is the standard Gaussian mass of the tree's cone ``C_T``.
``weight`` is ``1/|Aut T|`` (equivalently ``1/2^(k-1)`` per ribbon
structure).  The sign ``(-1)^chi(T)`` multiplies one factor per vertex: -1
when ``(-m_left, -m_right)`` is oppositely oriented to ``(-m1, -m2)``.

Geometry lives in the frame where ``m1, m2`` are orthonormal.  The affine
coordinates of the input walls are ``eta_1 = -c_2`` and ``eta_2 = c_1``.
Flows along ``-m_e`` run for non-positive times.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from . import kernels
from .lattice_algebra import Q, det, pairing, primitive_part
from .scattering_core import LINE, RAY, Diagram, Wall, ks_complete, primitive_normal
from .tropical_vertex import LieElement, normal_of

QUADRATURE = "quadrature"
MONTE_CARLO = "montecarlo"
SNAP_DENOMINATOR = 64


def _threads():
    try:
        return max(1, int(os.environ.get("SCATTER_THREADS", "1")))
    except ValueError:
        return 1


# -- trees ------------------------------------------------------------------
# A leaf is a triple (input, k, j); an internal node is a pair (left, right).


def is_leaf(shape):
    return len(shape) == 3


def tree_string(shape):
    if is_leaf(shape):
        return "%d.%d.%d" % shape
    return "[" + tree_string(shape[0]) + " " + tree_string(shape[1]) + "]"


def leaves(shape):
    if is_leaf(shape):
        return [shape]
    return leaves(shape[0]) + leaves(shape[1])


def tree_order(shape):
    return sum(leaf[2] for leaf in leaves(shape))


def canonical(shape):
    """Child order fixed by the string form; identifies ribbon structures."""
    if is_leaf(shape):
        return shape
    a, b = canonical(shape[0]), canonical(shape[1])
    if tree_string(b) < tree_string(a):
        a, b = b, a
    return (a, b)


def automorphisms(shape):
    if is_leaf(shape):
        return 1
    a, b = shape
    n = automorphisms(a) * automorphisms(b)
    return 2 * n if canonical(a) == canonical(b) else n


def ribbon_structures(shape):
    if is_leaf(shape):
        return [shape]
    out = []
    seen = set()
    for a in ribbon_structures(shape[0]):
        for b in ribbon_structures(shape[1]):
            for s in ((a, b), (b, a)):
                if s not in seen:
                    seen.add(s)
                    out.append(s)
    return out


@dataclass(frozen=True)
class LabeledTree:
    shape: tuple
    leaves: int
    order: int
    automorphisms: int
    ribbon_count: int

    @property
    def name(self):
        return tree_string(self.shape)


def _cmode(shape):
    if is_leaf(shape):
        i, k, _ = shape
        return (k, 0) if i == 1 else (0, k)
    a, b = _cmode(shape[0]), _cmode(shape[1])
    return (a[0] + b[0], a[1] + b[1])


def _transversal(shape):
    if is_leaf(shape):
        return True
    return det(_cmode(shape[0]), _cmode(shape[1])) != 0


def input_leaves(inputs):
    """``{(i, k, j): a}`` with ``Log Theta_i = sum a z^{k m_i} t^j d_{n_i}``."""
    out = {}
    for i, w in enumerate(inputs, start=1):
        n = primitive_normal(w)
        for m, j, _v in w.log_theta.items():
            k = pairing(m, w.direction) // pairing(w.direction, w.direction)
            a = w.log_theta.coeff_along(m, j, n)
            if a:
                out[(i, k, j)] = a
    return out


def enumerate_trees(inputs, order, planar=False, prune=True):
    """Labelled trees with ``j_T <= order`` built from the input leaves.

    Non-planar trees are listed once in canonical form; with ``planar=True``
    every ribbon structure is listed separately.  ``prune`` drops trees
    containing a join of parallel modes, whose walls are empty.
    """
    leaf_labels = sorted(input_leaves(inputs))
    by_j = {j: [] for j in range(1, order + 1)}
    for lab in leaf_labels:
        if lab[2] <= order:
            by_j[lab[2]].append(lab)
    for j in range(2, order + 1):
        found = []
        seen = set()
        for j1 in range(1, j):
            j2 = j - j1
            if not planar and j1 > j2:
                break
            for ia, a in enumerate(by_j[j1]):
                for ib, b in enumerate(by_j[j2]):
                    if not planar and j1 == j2 and ib < ia:
                        continue
                    s = (a, b) if planar else canonical((a, b))
                    if prune and not (_transversal(s) and all(_transversal_all(x) for x in (a, b))):
                        continue
                    if s in seen:
                        continue
                    seen.add(s)
                    found.append(s)
        by_j[j].extend(found)
    out = []
    for j in range(1, order + 1):
        for s in by_j[j]:
            k = len(leaves(s))
            aut = automorphisms(s)
            out.append(LabeledTree(s, k, j, aut, 2 ** (k - 1) // aut))
    out.sort(key=lambda t: (t.order, t.leaves, t.name))
    return out


def _transversal_all(shape):
    if is_leaf(shape):
        return True
    return _transversal(shape) and _transversal_all(shape[0]) and _transversal_all(shape[1])


# -- propagation ----------------------------------------------------------------


def orientation_chi(m_left, m_right, m1, m2):
    """+1 when (-m_left, -m_right) and (-m1, -m2) have the same orientation."""
    s = det(m_left, m_right) * det(m1, m2)
    return 1 if s > 0 else -1


@dataclass(frozen=True)
class TreeEvaluation:
    m_T: tuple
    j_T: int
    n_T: tuple
    chi: int
    wall: object  # primitive direction of the ray/line, or None when empty
    leaf_product: object
    coefficient: float = None
    coefficient_error: float = None


def propagate(shape, inputs, chi_rule=orientation_chi):
    """Labels, bracket normal and orientation sign of a planar tree."""
    w1, w2 = inputs
    m1, m2 = w1.direction, w2.direction
    coeffs = input_leaves(inputs)

    def rec(s):
        if is_leaf(s):
            i, k, j = s
            w = inputs[i - 1]
            m = (k * w.direction[0], k * w.direction[1])
            return m, j, primitive_normal(w), 1, True, coeffs.get(s, Q(0))
        ml, jl, nl, cl, okl, al = rec(s[0])
        mr, jr, nr, cr, okr, ar = rec(s[1])
        m = (ml[0] + mr[0], ml[1] + mr[1])
        ok = okl and okr and det(ml, mr) != 0
        p, q = pairing(mr, nl), pairing(ml, nr)
        n = (p * nr[0] - q * nl[0], p * nr[1] - q * nl[1])
        chi = cl * cr * (chi_rule(ml, mr, m1, m2) if ok else 1)
        return m, jl + jr, n, chi, ok, al * ar

    m, j, n, chi, ok, a = rec(shape)
    if not ok:
        wall = None
    else:
        wall = primitive_part(m)[0]
    return TreeEvaluation(m, j, n, chi, wall, a)


# -- cones ------------------------------------------------------------------


@dataclass
class Cone:
    """``{G z : z_i >= 0 for i not free}`` for an invertible k x k matrix G."""

    generators: np.ndarray
    free: tuple = field(default=None)

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if g.shape[0] != g.shape[1]:
            raise ValueError(f"need k generators in R^k, got shape {g.shape}")
        self.generators = g
        if self.free is None:
            self.free = (False,) * g.shape[1]
        self.free = tuple(bool(x) for x in self.free)
        if len(self.free) != g.shape[1]:
            raise ValueError("free mask length differs from the number of generators")
        if abs(np.linalg.det(g)) < 1e-12 * max(1.0, np.abs(g).max()) ** g.shape[0]:
            raise ValueError("cone generators are linearly dependent")

    @property
    def dimension(self):
        return self.generators.shape[0]

    @classmethod
    def from_generators(cls, vectors):
        """Cone spanned by non-negative combinations; opposite pairs become lines."""
        vs = [np.asarray(v, dtype=float) for v in vectors]
        used = [False] * len(vs)
        cols, free = [], []
        for i, v in enumerate(vs):
            if used[i]:
                continue
            used[i] = True
            line = False
            for j in range(i + 1, len(vs)):
                if used[j]:
                    continue
                u = vs[j]
                if np.allclose(u / np.linalg.norm(u), -v / np.linalg.norm(v)):
                    used[j] = True
                    line = True
                    break
            cols.append(v)
            free.append(line)
        return cls(np.column_stack(cols), tuple(free))

    def constraints(self):
        """Rows ``b`` with cone = ``{x : b . x >= 0}``."""
        inv = np.linalg.inv(self.generators)
        rows = [inv[i] for i, f in enumerate(self.free) if not f]
        if not rows:
            return np.zeros((0, self.dimension))
        return np.array(rows)

    def contains(self, x):
        b = self.constraints()
        return bool(np.all(b @ np.asarray(x, dtype=float) >= 0))

    def transformed(self, matrix):
        return Cone(np.asarray(matrix, dtype=float) @ self.generators, self.free)


class EmptyWallError(ValueError):
    pass


def _edges(shape):
    """Internal edges as (c-mode, leaf indices below), root edge first."""
    out = []
    counter = [0]

    def rec(s):
        if is_leaf(s):
            idx = counter[0]
            counter[0] += 1
            return [idx]
        below = rec(s[0]) + rec(s[1])
        out.append((_cmode(s), below))
        return below

    rec(shape)
    out.reverse()
    return out


def _eta(i, v):
    return -v[1] if i == 1 else v[0]


def cone_of_tree(shape, path_direction=None, tol=1e-9):
    """Tangent cone at the origin of the image of flow times and path parameter.

    Returns ``(cone, outside)`` where ``outside`` is True when the origin is
    not in the closure of the image (the tree then contributes nothing).
    """
    if not _transversal_all(shape):
        raise EmptyWallError(f"tree {tree_string(shape)} has an empty wall")
    lv = leaves(shape)
    k = len(lv)
    mT = np.array(_cmode(shape), dtype=float)
    unit = mT / np.linalg.norm(mT)
    if path_direction is None:
        path_direction = (unit[1], -unit[0])  # rot90(-m_T)
    rho1 = np.asarray(path_direction, dtype=float)
    rho0 = -unit
    if k == 1:
        a = np.array([[_eta(lv[0][0], rho1)]])
        return Cone(a, (True,)), False
    edges = _edges(shape)
    a = np.zeros((k, k))
    b = np.zeros(k)
    for r, leaf in enumerate(lv):
        a[r, 0] = _eta(leaf[0], rho1)
        b[r] = _eta(leaf[0], rho0)
    for c, (mode, below) in enumerate(edges, start=1):
        for r in below:
            a[r, c] = -_eta(lv[r][0], mode)
    if abs(np.linalg.det(a)) < 1e-12:
        raise EmptyWallError(f"degenerate flow map for tree {tree_string(shape)}")
    z = np.linalg.solve(a, -b)
    scale = max(1.0, float(np.abs(z).max()))
    free = [True]  # path parameter
    outside = False
    for c in range(1, k):
        s = z[c]
        if c == 1 or s < -tol * scale:
            free.append(True)
        elif s > tol * scale:
            free.append(True)
            outside = True
        else:
            free.append(False)
    if z[1] > -tol * scale:
        outside = True
    gens = a.copy()
    gens[:, 1:] *= -1.0  # flow times decrease from zero
    return Cone(gens, tuple(free)), outside


# -- Gaussian measure ---------------------------------------------------------------


def _orthant_quadrature(cov, n):
    """P(W >= 0) for W ~ N(0, cov) via Genz's separation of variables and
    tensor Gauss-Legendre in the d-1 remaining unit-cube variables."""
    d = cov.shape[0]
    L = np.linalg.cholesky(cov)
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    if d == 1:
        return 0.5
    grids = np.meshgrid(*([x] * (d - 1)), indexing="ij")
    weights = np.ones_like(grids[0])
    wgrids = np.meshgrid(*([w] * (d - 1)), indexing="ij")
    for wg in wgrids:
        weights = weights * wg
    pts = [g.ravel() for g in grids]
    weights = weights.ravel()
    m = weights.size
    ys = np.zeros((d, m))
    val = np.full(m, 0.5)  # P(Z_1 >= 0)
    e = np.full(m, 0.5)
    for i in range(d):
        if i > 0:
            lower = -(L[i, :i] @ ys[:i]) / L[i, i]
            e = ndtr(-lower)
            val = val * e
        if i < d - 1:
            ys[i] = -ndtri(np.clip(pts[i] * e, 1e-300, 1.0))
    return float(np.sum(weights * val))


def gaussian_cone_measure(cone, method=QUADRATURE, budget=None, seed=0, sampler="sobol"):
    """Standard Gaussian mass of ``cone`` with an error estimate.

    Quadrature budget is the number of Gauss-Legendre nodes per dimension
    (the estimate compares ``n`` with ``2n``); Monte Carlo budget is the
    number of samples and the estimate is three standard errors.  The
    default sampler is scrambled Sobol over ``RQMC_REPLICAS`` independent
    scramblings, with the first coordinate integrated exactly (conditional
    Monte Carlo); ``sampler="pseudo"`` is plain hit-or-miss sampling.
    """
    b = cone.constraints()
    d = b.shape[0]
    if d == 0:
        return 1.0, 0.0
    if d == 1:
        return 0.5, 0.0
    if method == QUADRATURE:
        if cone.dimension > 6:
            raise ValueError("quadrature supports cones of dimension <= 6; use Monte Carlo")
        bn = b / np.linalg.norm(b, axis=1, keepdims=True)
        cov = bn @ bn.T
        n = budget or {2: 64, 3: 40, 4: 16, 5: 10}.get(d, 8)
        v1 = _orthant_quadrature(cov, n)
        v2 = _orthant_quadrature(cov, 2 * n)
        return v2, abs(v2 - v1) + 1e-14
    if method == MONTE_CARLO:
        return _monte_carlo(b, cone.dimension, int(budget or 1_000_000), seed, sampler)
    raise ValueError(f"unknown method {method!r}")


RQMC_REPLICAS = 8


def _monte_carlo(b, dim, n, seed, sampler):
    chunk = 1 << 18
    if sampler == "pseudo":
        rng = np.random.default_rng(seed)
        hits = done = 0
        while done < n:
            m = min(chunk, n - done)
            hits += kernels.orthant_count(rng.standard_normal((m, dim)), b)
            done += m
        p = hits / n
        return p, 3.0 * math.sqrt(max(p * (1 - p), 1.0 / n) / n)
    if sampler != "sobol":
        raise ValueError(f"unknown sampler {sampler!r}")
    per = 1 << max(1, math.ceil(math.log2(max(n, RQMC_REPLICAS) / RQMC_REPLICAS)))
    seeds = np.random.SeedSequence(seed).spawn(RQMC_REPLICAS)
    est = []
    for ss in seeds:
        eng = qmc.Sobol(max(dim - 1, 1), scramble=True, seed=np.random.default_rng(ss))
        total = 0.0
        done = 0
        while done < per:
            m = min(chunk, per - done)
            u = np.clip(eng.random(m), 1e-16, 1 - 1e-16)
            total += float(_conditional_mass(b, ndtri(u)[:, : dim - 1]).sum())
            done += m
        est.append(total / per)
    est = np.array(est)
    p = float(est.mean())
    se = float(est.std(ddof=1)) / math.sqrt(len(est))
    return p, 3.0 * max(se, 1e-12)


def _conditional_mass(b, rest):
    """P(b z >= 0 | z_2.. = rest), integrating z_1 exactly."""
    lead = b[:, 0]
    shift = rest @ b[:, 1:].T  # b_i1 z_1 + shift_i >= 0
    lo = np.full(rest.shape[0], -np.inf)
    hi = np.full(rest.shape[0], np.inf)
    ok = np.ones(rest.shape[0], dtype=bool)
    for i, c in enumerate(lead):
        if c > 0:
            lo = np.maximum(lo, -shift[:, i] / c)
        elif c < 0:
            hi = np.minimum(hi, -shift[:, i] / c)
        else:
            ok &= shift[:, i] >= 0
    return np.where(ok, np.clip(ndtr(hi) - ndtr(lo), 0.0, 1.0), 0.0)


# -- assembly ------------------------------------------------------------------------


def snap(value, error, max_den=SNAP_DENOMINATOR):
    """Nearest rational with denominator <= max_den if within 10x the error."""
    r = Fraction(value).limit_denominator(max_den)
    if abs(float(r) - value) <= max(10.0 * error, 1e-9):
        return r
    return None


@dataclass
class TreeRecord:
    tree: str
    m_T: tuple
    j_T: int
    n_T: tuple
    chi: int
    measure: float
    error: float
    weight: Fraction
    leaf_product: object
    contribution: tuple

    def to_json(self):
        return {
            "tree": self.tree,
            "m_T": list(self.m_T),
            "j_T": self.j_T,
            "n_T": [int(x) for x in self.n_T],
            "chi": self.chi,
            "measure": self.measure,
            "error": self.error,
            "weight": str(self.weight),
            "leaf_product": str(self.leaf_product),
        }


@dataclass
class WallTerm:
    m: tuple
    j: int
    value: float
    error: float
    residual: float
    exact: Fraction = None


@dataclass
class Assembly:
    order: int
    walls: dict  # primitive direction -> {(m, j): WallTerm}
    trees: list
    flagged: list

    def diagram(self, inputs):
        """Exact diagram from snapped coefficients (raises if any term failed to snap)."""
        if self.flagged:
            raise ValueError(f"unsnapped coefficients: {self.flagged}")
        walls = [w.with_order(self.order) for w in inputs]
        for a in sorted(self.walls):
            n = normal_of(a)
            terms = {}
            for (m, j), t in self.walls[a].items():
                if t.exact:
                    c = Q(t.exact)
                    terms[(m, j)] = (c * n[0], c * n[1])
            if terms:
                walls.append(Wall(a, RAY, LieElement(self.order, terms)))
        return Diagram(self.order, walls)


def _measure_cached(cache, cone, method, budget, seed):
    key = (method, budget, seed, cone.free, tuple(np.round(cone.generators, 12).ravel()))
    if key not in cache:
        cache[key] = gaussian_cone_measure(cone, method, budget, seed)
    return cache[key]


def evaluate_tree(shape, weight, inputs, method=QUADRATURE, budget=None, seed=0, chi_rule=orientation_chi, cache=None):
    ev = propagate(shape, inputs, chi_rule)
    if ev.wall is None or not ev.leaf_product:
        return None
    cone, outside = cone_of_tree(shape)
    if outside:
        mu, err = 0.0, 0.0
    else:
        mu, err = _measure_cached(cache if cache is not None else {}, cone, method, budget, seed)
    # integral of the tree form along a positive crossing, inputs -a_i delta_i
    integral = -float(ev.chi) * mu * float(ev.leaf_product)
    # the gauge is minus the integral
    c = -integral * float(weight)
    contribution = (c * ev.n_T[0], c * ev.n_T[1])
    err_c = abs(float(weight) * float(ev.leaf_product)) * err
    return TreeRecord(
        tree_string(shape), ev.m_T, ev.j_T, ev.n_T, ev.chi, mu, err_c, weight, ev.leaf_product, contribution
    )


def assemble_wall_factors(
    inputs,
    order,
    method=QUADRATURE,
    budget=None,
    seed=0,
    bookkeeping="automorphism",
    chi_rule=orientation_chi,
):
    """Ray factors from the tree sum, keyed by primitive direction."""
    if bookkeeping == "automorphism":
        trees = [(t.shape, Fraction(1, t.automorphisms)) for t in enumerate_trees(inputs, order)]
    elif bookkeeping == "ribbon":
        trees = [
            (t.shape, Fraction(1, 2 ** (t.leaves - 1))) for t in enumerate_trees(inputs, order, planar=True)
        ]
    else:
        raise ValueError(f"unknown bookkeeping {bookkeeping!r}")
    trees = [(s, w) for s, w in trees if not is_leaf(s)]
    cache = {}

    def run(item):
        return evaluate_tree(item[0], item[1], inputs, method, budget, seed, chi_rule, cache)

    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run, trees))
    else:
        records = [run(t) for t in trees]
    records = [r for r in records if r is not None]

    acc = {}
    for r in records:
        key = (r.m_T, r.j_T)
        v, e = acc.get(key, ((0.0, 0.0), 0.0))
        acc[key] = ((v[0] + r.contribution[0], v[1] + r.contribution[1]), e + r.error)
    walls = {}
    flagged = []
    for (m, j), (v, e) in sorted(acc.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        a = primitive_part(m)[0]
        n = normal_of(a)
        nn = n[0] * n[0] + n[1] * n[1]
        b = (v[0] * n[0] + v[1] * n[1]) / nn
        res = math.hypot(v[0] - b * n[0], v[1] - b * n[1])
        exact = snap(b, e)
        if exact is None:
            flagged.append((m, j, b))
        t = WallTerm(m, j, b, e, res, exact)
        walls.setdefault(a, {})[(m, j)] = t
    return Assembly(order, walls, records, flagged)


def verify_against_ks(inputs, order, tol=1e-3, method=QUADRATURE, budget=None, seed=0, chi_rule=orientation_chi,
                      bookkeeping="automorphism"):
    w1, w2 = inputs
    ks = ks_complete(w1, w2, order)
    ks_rays = {w.direction: w for w in ks.walls if w.support == RAY}
    asm = assemble_wall_factors(inputs, order, method, budget, seed, bookkeeping, chi_rule)
    deviations = []
    structural = []
    for a in sorted(set(ks_rays) | set(asm.walls)):
        n = normal_of(a)
        ks_terms = {}
        if a in ks_rays:
            for m, j, _v in ks_rays[a].log_theta.items():
                ks_terms[(m, j)] = ks_rays[a].log_theta.coeff_along(m, j, n)
        mc_terms = asm.walls.get(a, {})
        for key in sorted(set(ks_terms) | set(mc_terms), key=lambda kj: (kj[1], kj[0])):
            exact = ks_terms.get(key, Q(0))
            got = mc_terms[key].value if key in mc_terms else 0.0
            dev = abs(got - float(exact))
            deviations.append({"direction": list(a), "m": list(key[0]), "j": key[1],
                               "ks": str(exact), "mc": got, "dev": dev})
            if dev > tol and (a not in ks_rays or a not in asm.walls):
                structural.append(list(a))
    max_dev = max((d["dev"] for d in deviations), default=0.0)
    snapped_match = False
    if not asm.flagged:
        mc_diagram = asm.diagram(inputs)
        mc_rays = {w.direction: w.log_theta for w in mc_diagram.walls if w.support == RAY}
        snapped_match = mc_rays == {a: w.log_theta for a, w in ks_rays.items()}
    ok = max_dev <= tol and not structural
    return {
        "order": order,
        "walls": _report_walls(inputs, asm),
        "per_tree": [r.to_json() for r in asm.trees],
        "deviations": deviations,
        "structural_mismatch": structural,
        "flagged": [[list(m), j, b] for m, j, b in asm.flagged],
        "ks_match": ok,
        "snapped_match": snapped_match,
        "max_dev": max_dev,
    }


def _report_walls(inputs, asm):
    out = [w.with_order(asm.order).to_json() for w in inputs]
    for a in sorted(asm.walls):
        terms = []
        for (m, j), t in sorted(asm.walls[a].items(), key=lambda kv: (kv[0][1], kv[0][0])):
            terms.append({"m": list(m), "j": j, "value": t.value, "error": t.error,
                          "exact": None if t.exact is None else str(t.exact)})
        out.append({"direction": list(a), "support": RAY, "normal": list(normal_of(a)), "terms": terms})
    return out
