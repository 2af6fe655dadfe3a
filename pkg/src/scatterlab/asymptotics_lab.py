"""Finite-hbar numerics: Gaussian delta forms, flow homotopies, gauge iteration.

Grids are square lattices in a frame ``(a, b)`` adapted to a wall direction
``m``: ``e1 = -m/|m|`` (the flow of ``-m``) and ``e2 = rot90(e1)``, which is
the unit normal pointing into ``H_+``.  A node is ``center + a e1 + b e2``
with ``a, b`` in ``[-R, R]``; arrays are indexed ``[ia, ib]``.  Results are
reported on the disc of radius ``R``.

The vector field ``d_n`` acts on coefficient functions as
``hbar * <n, grad>`` (flat metric, no 4 pi).
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import erf

from .lattice_algebra import primitive_part
from .tropical_vertex import normal_of

X0 = np.array([1.0, 1.0]) * (0.5 / math.sqrt(2.0))
DEFAULT_NODES = 513  # 512 cells per axis


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _rot(v):
    return np.array([-v[1], v[0]])


@dataclass(frozen=True)
class Grid:
    center: tuple
    radius: float
    nodes: int
    e1: tuple
    e2: tuple

    @classmethod
    def aligned(cls, m, nodes=DEFAULT_NODES, center=X0, radius=1.0):
        e1 = -_unit(m)
        e2 = _rot(e1)
        return cls(tuple(map(float, center)), float(radius), int(nodes), tuple(e1), tuple(e2))

    @property
    def h(self):
        return 2.0 * self.radius / (self.nodes - 1)

    @property
    def axis(self):
        return np.linspace(-self.radius, self.radius, self.nodes)

    def local(self):
        a = self.axis
        return np.meshgrid(a, a, indexing="ij")

    def points(self):
        A, B = self.local()
        c, e1, e2 = np.array(self.center), np.array(self.e1), np.array(self.e2)
        return c[0] + A * e1[0] + B * e2[0], c[1] + A * e1[1] + B * e2[1]

    def inside(self):
        A, B = self.local()
        return A * A + B * B <= self.radius**2 + 1e-12

    def to_local(self, p):
        d = np.asarray(p, dtype=float) - np.array(self.center)
        return float(d @ np.array(self.e1)), float(d @ np.array(self.e2))

    def nearest_node(self, p):
        a, b = self.to_local(p)
        i = int(round((a + self.radius) / self.h))
        j = int(round((b + self.radius) / self.h))
        if not (0 <= i < self.nodes and 0 <= j < self.nodes):
            raise ValueError(f"point {p} lies outside the grid")
        return i, j

    def frame(self):
        return np.array([self.e1, self.e2])  # rows: world components of e1, e2


@dataclass
class GridField:
    """Sampled scalar (degree 0), 1-form (degree 1) or 2-form (degree 2).

    1-form values have shape ``(2, n, n)`` holding the ``da`` and ``db``
    components; 2-forms store the ``da ^ db`` coefficient.  ``exact``
    optionally evaluates the world-frame covector at points of shape
    ``(..., 2)``; line integrals use it when present.
    """

    grid: Grid
    values: np.ndarray
    hbar: float
    degree: int
    exact: object = field(default=None, repr=False)

    def world(self):
        """1-form components in the ``dx, dy`` frame."""
        if self.degree != 1:
            raise ValueError("world components exist for 1-forms only")
        F = self.grid.frame()
        # alpha = fa da + fb db and da = e1 . dx
        return np.einsum("kij,kc->cij", self.values, F)


def _gaussian(u, hbar):
    return np.exp(-(u * u) / hbar) / math.sqrt(math.pi * hbar)


def delta_form(m, hbar, grid=None):
    """``(pi hbar)^(-1/2) exp(-u2^2/hbar) du2`` for the line ``R m`` through 0."""
    m0, _ = primitive_part(m)
    if grid is None:
        grid = Grid.aligned(m0)
    if grid.h > hbar / 4 + 1e-15:
        raise ValueError(f"grid spacing {grid.h:.4g} too coarse for hbar={hbar} (need h <= hbar/4)")
    nu = _rot(-_unit(m0))
    X, Y = grid.points()
    g = _gaussian(X * nu[0] + Y * nu[1], hbar)
    comps = np.array([g * float(np.dot(grid.e1, nu)), g * float(np.dot(grid.e2, nu))])

    def exact(p):
        p = np.asarray(p, dtype=float)
        gp = _gaussian(p[..., 0] * nu[0] + p[..., 1] * nu[1], hbar)
        return np.stack([gp * nu[0], gp * nu[1]], axis=-1)

    return GridField(grid, comps, hbar, 1, exact)


@dataclass
class FlowPath:
    points: np.ndarray

    @classmethod
    def segment(cls, p, q, samples=20001):
        t = np.linspace(0.0, 1.0, samples)[:, None]
        return cls((1 - t) * np.asarray(p, float) + t * np.asarray(q, float))

    @classmethod
    def polyline(cls, corners, samples_per_unit=4000):
        pts = [np.asarray(corners[0], float)[None, :]]
        for p, q in zip(corners[:-1], corners[1:]):
            p, q = np.asarray(p, float), np.asarray(q, float)
            n = max(2, int(np.linalg.norm(q - p) * samples_per_unit) + 1)
            t = np.linspace(0.0, 1.0, n)[1:, None]
            pts.append((1 - t) * p + t * q)
        return cls(np.vstack(pts))


def _bilinear(grid, arr, pts):
    c = np.array(grid.center)
    d = pts - c
    a = d @ np.array(grid.e1)
    b = d @ np.array(grid.e2)
    if np.any(a * a + b * b > grid.radius**2 * (1 + 1e-9)):
        raise ValueError("path leaves the disc; only analytic fields can be integrated there")
    fa = (a + grid.radius) / grid.h
    fb = (b + grid.radius) / grid.h
    i = np.clip(np.floor(fa).astype(int), 0, grid.nodes - 2)
    j = np.clip(np.floor(fb).astype(int), 0, grid.nodes - 2)
    ta, tb = fa - i, fb - j
    return (
        arr[..., i, j] * (1 - ta) * (1 - tb)
        + arr[..., i + 1, j] * ta * (1 - tb)
        + arr[..., i, j + 1] * (1 - ta) * tb
        + arr[..., i + 1, j + 1] * ta * tb
    )


def line_integral(form, path):
    """Trapezoidal integral of a 1-form along a polyline."""
    pts = path.points
    if form.exact is not None:
        vals = form.exact(pts)
    else:
        vals = np.moveaxis(_bilinear(form.grid, form.world(), pts), 0, -1)
    steps = np.diff(pts, axis=0)
    mids = 0.5 * (vals[1:] + vals[:-1])
    return float(np.sum(mids * steps))


def transversal_integral(m, hbar, half_length=3.0, samples=200001):
    """Integral of the delta form over a line crossing the wall ``R m`` normally."""
    nu = _rot(-_unit(primitive_part(m)[0]))
    form = delta_form(m, hbar, Grid.aligned(m, nodes=max(DEFAULT_NODES, int(8 / hbar) + 2)))
    return line_integral(form, FlowPath.segment(-half_length * nu, half_length * nu, samples))


def _check_aligned(m, grid):
    e1 = np.array(grid.e1)
    u = _unit(primitive_part(m)[0])
    if abs(abs(float(e1 @ u)) - 1.0) > 1e-12:
        raise ValueError(f"grid axes are not aligned with the flow of -{m}")
    return float(-(e1 @ u))  # +1 when e1 = -m/|m|


def _cumulative(arr, axis, start, h):
    c = cumulative_trapezoid(arr, dx=h, axis=axis, initial=0.0)
    ref = np.take(c, [start], axis=axis)
    return c - ref


def homotopy_apply(m, form, base=None, path="perp_first"):
    """Line integrals of ``form`` from ``base`` along flow-adapted L-shaped paths.

    ``perp_first`` first moves inside the hyperplane through ``base``
    orthogonal to ``m`` and then along ``-m``.  ``flow_first`` reverses the two
    legs.  For a 2-form the flow leg alone contributes and the result is the
    1-form ``(int w da) db``.
    """
    grid = form.grid
    sgn = _check_aligned(m, grid)
    i0, j0 = grid.nearest_node(grid.center if base is None else base)
    h = grid.h
    if form.degree == 1:
        fa, fb = form.values[0] * sgn, form.values[1]
        if path == "perp_first":
            perp = _cumulative(fb[i0, :], 0, j0, h)
            out = perp[None, :] + _cumulative(fa, 0, i0, h)
        elif path == "flow_first":
            flow = _cumulative(fa[:, j0], 0, i0, h)
            out = flow[:, None] + _cumulative(fb, 1, j0, h)
        else:
            raise ValueError(f"unknown path shape {path!r}")
        return GridField(grid, out, form.hbar, 0)
    if form.degree == 2:
        comps = np.zeros((2,) + form.values.shape)
        comps[1] = _cumulative(form.values * sgn, 0, i0, h)
        return GridField(grid, comps, form.hbar, 1)
    raise ValueError("homotopy acts on 1-forms and 2-forms")


# -- single wall ----------------------------------------------------------------


@dataclass
class GaugeResult:
    grid: Grid
    hbar: float
    direction: tuple
    normal: tuple
    coefficients: dict  # (k, j) -> float, Log Theta = sum a z^{k m} t^j d_n
    fields: dict  # (k, j) -> scalar array
    base: tuple

    def u2(self):
        nu = _rot(-_unit(self.direction))
        X, Y = self.grid.points()
        return X * nu[0] + Y * nu[1]

    def region(self, side, depth):
        u = self.u2()
        mask = self.grid.inside()
        return mask & (u >= depth) if side > 0 else mask & (u <= -depth)

    def plateau(self, k=1, j=1, depth=0.5):
        f = self.fields.get((k, j))
        if f is None:
            return 0.0
        return float(f[self.region(+1, depth)].mean())

    def sup_error(self, side=+1, depth=0.5):
        """max over Fourier/t modes of sup over the region of |phi - psi|."""
        mask = self.region(side, depth)
        worst = 0.0
        for key in set(self.fields) | set(self.coefficients):
            target = self.coefficients.get(key, 0.0) if side > 0 else 0.0
            f = self.fields.get(key)
            dev = abs(target) if f is None else float(np.abs(f[mask] - target).max())
            worst = max(worst, dev)
        return worst


def _grad(arr, h):
    return np.gradient(arr, h, axis=0), np.gradient(arr, h, axis=1)


def single_wall_gauge(log_theta, hbar, order=None, grid=None, base=None, base_depth=0.95):
    """Iterate ``phi_{s+1} = -H(Pi + sum_k ad_phi^k / (k+1)! d phi)_{s+1}``.

    ``Pi = -delta * Log Theta``; brackets of coefficient functions keep only
    the derivation pieces (parallel modes have vanishing algebraic bracket):
    ``[f, g] = f d_n(g) - d_n(f) g`` for a function ``f`` and a 1-form ``g``.
    """
    order = log_theta.order if order is None else int(order)
    if order > log_theta.order:
        raise ValueError(f"iteration order {order} exceeds the truncation order {log_theta.order}")
    terms = log_theta.items()
    if not terms:
        direction = (1, 1)
    else:
        direction = primitive_part(terms[0][0])[0]
    n = normal_of(direction)
    coeffs = {}
    for m, j, _v in terms:
        m0, k = primitive_part(m)
        if m0 != direction:
            raise ValueError("log_theta must be single-mode")
        if j <= order:
            coeffs[(k, j)] = float(log_theta.coeff_along(m, j, n))
    if grid is None:
        grid = Grid.aligned(direction)
    nu = _rot(-_unit(direction))
    if base is None:
        base = np.array(grid.center) - base_depth * nu
    if float(np.dot(base, nu)) >= 0:
        raise ValueError("the homotopy base point must lie in H_-")
    delta = delta_form(direction, hbar, grid)
    h = grid.h
    dn = hbar * np.array([np.dot(n, grid.e1), np.dot(n, grid.e2)])

    def d_n(arr):
        ga, gb = _grad(arr, h)
        return dn[0] * ga + dn[1] * gb

    def bracket(f, g):
        df = d_n(f)
        return np.array([f * d_n(g[0]) - df * g[0], f * d_n(g[1]) - df * g[1]])

    fields = {}
    for s in range(order):
        target = s + 1
        source = {}
        for (k, j), a in coeffs.items():
            if j == target:
                source[(k, j)] = source.get((k, j), 0.0) - a * delta.values
        # d phi^s then repeated brackets with phi^s
        cur = {key: np.array(_grad(f, h)) for key, f in fields.items()}
        fact = 1.0
        for kk in range(1, target + 1):
            nxt = {}
            for (k1, j1), f in fields.items():
                for (k2, j2), g in cur.items():
                    if j1 + j2 > target:
                        continue
                    key = (k1 + k2, j1 + j2)
                    b = bracket(f, g)
                    nxt[key] = nxt[key] + b if key in nxt else b
            if not nxt:
                break
            fact *= kk + 1
            for key, g in nxt.items():
                if key[1] == target:
                    source[key] = source.get(key, 0.0) + g / fact
            cur = nxt
        for key, form in source.items():
            phi = homotopy_apply(direction, GridField(grid, form, hbar, 1), base, path="flow_first")
            fields[key] = -phi.values
    return GaugeResult(grid, hbar, direction, n, coeffs, fields, tuple(map(float, base)))


def convergence_rate(errors):
    """Least-squares slope of log(error) against log(hbar)."""
    errors = list(errors)
    if len(errors) < 3:
        raise ValueError("need at least three (hbar, error) samples")
    hs = [h for h, _ in errors]
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("hbar values must be strictly decreasing")
    if any(e <= 0 for _, e in errors):
        raise ValueError("errors must be positive")
    x = np.log(np.array(hs, dtype=float))
    y = np.log(np.array([e for _, e in errors], dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def _threads():
    try:
        return max(1, int(os.environ.get("SCATTER_THREADS", "1")))
    except ValueError:
        return 1


def single_wall_sweep(log_theta, hbars, order=None, depth=0.5, nodes=DEFAULT_NODES):
    """``[(hbar, sup error on H_+, sup on H_-, plateau)]`` for each hbar."""

    def one(hb):
        m0 = primitive_part(log_theta.items()[0][0])[0]
        res = single_wall_gauge(log_theta, hb, order, Grid.aligned(m0, nodes))
        return (hb, res.sup_error(+1, depth), res.sup_error(-1, depth), res.plateau(1, 1, depth))

    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, hbars))
    return [one(hb) for hb in hbars]


# -- two walls ---------------------------------------------------------------------


def two_wall_first_correction(hbar, nodes=DEFAULT_NODES, crossing=0.4, scales=(1.0, 1.0)):
    """Leading scattered coefficient on the (1,1) ray from the iterated flow integral.

    Inputs are ``-s_i delta_i`` for the lines along (1,0) and (0,1).  The
    2-tree term is ``-H(alpha_1 ^ alpha_2)``; the returned number is minus its
    integral along the transversal line crossing the ray positively at
    distance ``crossing`` from the origin.  The line is cut at the grid edge,
    which drops a tail below ``erfc(radius / sqrt(hbar))``.
    """
    mT = (1, 1)
    grid = Grid.aligned(mT, nodes)
    if grid.h > hbar / 4 + 1e-15:
        raise ValueError(f"grid spacing {grid.h:.4g} too coarse for hbar={hbar}")
    X, Y = grid.points()
    # eta_1 = -y, eta_2 = x; d eta_1 ^ d eta_2 = dx ^ dy = da ^ db
    w = scales[0] * scales[1] * _gaussian(-Y, hbar) * _gaussian(X, hbar)
    alpha_T = homotopy_apply(mT, GridField(grid, -w, hbar, 2))
    ip, _ = grid.nearest_node(-crossing * _unit(mT))
    return -float(_trapezoid(alpha_T.values[1][ip], grid.axis))


def two_wall_reference(hbar, crossing=0.4, radius=1.0):
    """Closed form of the truncated Gaussian integral computed by the above."""
    base = float(np.linalg.norm(X0))
    along = 0.5 * (erf(crossing / math.sqrt(hbar)) + erf(base / math.sqrt(hbar)))
    return along * erf(radius / math.sqrt(hbar))


def _trapezoid(y, x):
    return np.trapezoid(y, x) if hasattr(np, "trapezoid") else np.trapz(y, x)


def heatmap_svg(values, mask, size=320, cells=64):
    """Grey-scale SVG of |values| on the disc, downsampled to ``cells``^2."""
    n = values.shape[0]
    step = max(1, n // cells)
    v = np.abs(values[::step, ::step])
    mk = mask[::step, ::step]
    top = float(v[mk].max()) if mk.any() else 1.0
    top = top or 1.0
    px = size / v.shape[0]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">']
    for i in range(v.shape[0]):
        for j in range(v.shape[1]):
            if not mk[i, j]:
                continue
            g = int(255 * (1 - v[i, j] / top))
            out.append(
                f'<rect x="{j * px:.1f}" y="{i * px:.1f}" width="{px:.1f}" height="{px:.1f}" '
                f'fill="rgb({g},{g},{g})"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
