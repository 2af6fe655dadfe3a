"""Walls through a joint at the origin, path-ordered products and KS completion.

Conventions (checked by the tests rather than assumed):

* a wall with primitive direction ``m`` is oriented by ``-m``; its oriented
  normal is ``nu = rot90(-m)`` and its primitive normal ``n`` satisfies
  ``<nu, n> < 0``, which gives ``n = (-b, a)`` for ``m = (a, b)``;
* a line wall is ``R m``, a ray wall is ``-R_{>=0} m``;
* the loop runs anticlockwise around the origin; a crossing counts with
  ``sigma = +1`` when the loop moves along ``nu``;
* the path-ordered product puts later crossings on the left.
"""

import math
from dataclasses import dataclass

from .lattice_algebra import det, pairing, primitive_part
from .tropical_vertex import GroupElement, LieElement, bch, group_equal, normal_of

LINE = "line"
RAY = "ray"
TWO_PI = 2.0 * math.pi


class InconsistencyError(RuntimeError):
    """Raised when completion meets a defect it cannot attribute to a ray."""


@dataclass(frozen=True)
class Wall:
    direction: tuple
    support: str
    log_theta: LieElement

    def __post_init__(self):
        d = (int(self.direction[0]), int(self.direction[1]))
        object.__setattr__(self, "direction", d)
        if d == (0, 0):
            raise ValueError("wall direction must be nonzero")
        if primitive_part(d)[1] != 1:
            raise ValueError(f"wall direction {d} is not primitive")
        if self.support not in (LINE, RAY):
            raise ValueError(f"unknown support {self.support!r}")
        for m, j, _v in self.log_theta.items():
            if det(m, d) != 0 or pairing(m, d) <= 0:
                raise ValueError(f"term z^{m} t^{j} is not a positive multiple of the direction {d}")

    @property
    def order(self):
        return self.log_theta.order

    def with_order(self, order):
        return Wall(self.direction, self.support, self.log_theta.with_order(order))

    def is_trivial(self):
        return self.log_theta.is_zero()

    def half_lines(self):
        """Directions of the half-lines making up the support."""
        a, b = self.direction
        if self.support == RAY:
            return [(-a, -b)]
        return [(a, b), (-a, -b)]

    def to_json(self):
        return {
            "direction": list(self.direction),
            "support": self.support,
            "normal": list(primitive_normal(self)),
            "log_theta": self.log_theta.to_json(),
        }

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(tuple(obj["direction"]), obj["support"], LieElement.from_json(obj["log_theta"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed wall JSON: {exc}") from exc


@dataclass(frozen=True)
class Diagram:
    order: int
    walls: tuple

    def __post_init__(self):
        object.__setattr__(self, "walls", tuple(self.walls))
        for w in self.walls:
            if w.order != self.order:
                raise ValueError(f"wall order {w.order} differs from diagram order {self.order}")

    def with_order(self, order):
        return Diagram(order, [w.with_order(order) for w in self.walls])

    def nontrivial(self):
        return [w for w in self.walls if not w.is_trivial()]

    def to_json(self):
        return {"order": self.order, "walls": [w.to_json() for w in self.walls]}

    @classmethod
    def from_json(cls, obj):
        try:
            order = int(obj["order"])
            walls = [Wall.from_json(w) for w in obj["walls"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed diagram JSON: {exc}") from exc
        return cls(order, walls)


def primitive_normal(w):
    direction = w.direction if isinstance(w, Wall) else w
    return normal_of(direction)


def oriented_normal(direction):
    a, b = direction
    return (b, -a)


def line_wall(direction, f, order=None):
    """Line wall whose factor acts by ``z^p -> z^p f^{<p, n>}`` (``f`` given as a series)."""
    from .lattice_algebra import series_log

    n = normal_of(direction)
    log = LieElement.from_series(series_log(f), n)
    return Wall(primitive_part(direction)[0], LINE, log if order is None else log.with_order(order))


def standard_inputs(kind="simple", order=3, m1=(1, 0), m2=(0, 1)):
    """The two initial walls ``c * log(1 + t z^{m_i})`` with ``c = 1`` (simple) or 2 (doubled)."""
    from .lattice_algebra import TruncatedSeries

    scale = {"simple": 1, "doubled": 2}[kind]
    walls = []
    for m in (m1, m2):
        f = TruncatedSeries(order, {((0, 0), 0): 1, (tuple(m), 1): 1})
        w = line_wall(m, f, order)
        walls.append(Wall(w.direction, LINE, w.log_theta.scale(scale)))
    return walls[0], walls[1]


# -- loops ------------------------------------------------------------------


def _angle(v):
    a = math.atan2(v[1], v[0])
    return a + TWO_PI if a < 0 else a


def orientation_sign(direction, half_line):
    """sigma for an anticlockwise loop crossing the half-line ``half_line`` of a wall."""
    s = -pairing(direction, half_line)
    return 1 if s > 0 else -1


@dataclass(frozen=True)
class Crossing:
    wall: int
    sigma: int
    angle: float
    half_line: tuple


def wall_angles(d):
    return sorted({_angle(h) for w in d.walls for h in w.half_lines()})


def default_base_angle(d, reference=None):
    """Start angle of the standard loop.

    The reference direction is ``(1, 1)`` (the base region between the two
    initial lines) nudged by an irrational offset; if a wall sits there the
    midpoint of the next angular gap is used.
    """
    ref = (math.pi / 4 if reference is None else _angle(reference)) + 1e-3 * math.sqrt(2)
    ref %= TWO_PI
    angles = wall_angles(d)
    if not angles or min(min(abs(ref - a), TWO_PI - abs(ref - a)) for a in angles) > 1e-9:
        return ref
    after = [a for a in angles if a > ref + 1e-9]
    lo = after[0] if after else angles[0] + TWO_PI
    nxt = [a for a in angles if a > lo + 1e-9]
    hi = nxt[0] if nxt else angles[0] + TWO_PI
    return ((lo + hi) / 2) % TWO_PI


def crossings_of_loop(d, base_angle=None, sign_rule=orientation_sign):
    if base_angle is None:
        base_angle = default_base_angle(d)
    base_angle %= TWO_PI
    out = []
    for i, w in enumerate(d.walls):
        for h in w.half_lines():
            a = _angle(h)
            gap = (a - base_angle) % TWO_PI
            if gap < 1e-12 or TWO_PI - gap < 1e-12:
                raise ValueError(f"base angle {base_angle} lies on wall {i} ({w.direction}, {w.support})")
            out.append((gap, i, Crossing(i, sign_rule(w.direction, h), a, h)))
    out.sort(key=lambda t: (t[0], t[1]))
    return [c for _, _, c in out]


def path_ordered_product(d, crossings):
    total = LieElement.zero(d.order)
    for c in crossings:
        x = d.walls[c.wall].log_theta
        total = bch(x if c.sigma > 0 else -x, total)
    return GroupElement(total)


def loop_product(d, base_angle=None, sign_rule=orientation_sign):
    return path_ordered_product(d, crossings_of_loop(d, base_angle, sign_rule))


def is_consistent(d, base_angle=None, sign_rule=orientation_sign):
    g = loop_product(d, base_angle, sign_rule)
    return group_equal(g, GroupElement.identity(d.order))


# -- minimality and equivalence ---------------------------------------------------


def minimize(d):
    merged = {}
    keys = []
    for w in d.walls:
        key = (w.direction, w.support)
        if key in merged:
            merged[key] = bch(merged[key], w.log_theta)
        else:
            merged[key] = w.log_theta
            keys.append(key)
    walls = [Wall(k[0], k[1], merged[k]) for k in keys if not merged[k].is_zero()]
    return Diagram(d.order, walls)


def _half_line_factor(d, h, sign_rule=orientation_sign):
    total = LieElement.zero(d.order)
    for w in d.walls:
        if h in w.half_lines():
            x = w.log_theta
            total = bch(x if sign_rule(w.direction, h) > 0 else -x, total)
    return GroupElement(total)


def diagrams_equivalent(d1, d2, base_angle=None):
    if d1.order != d2.order:
        raise ValueError(f"diagram orders differ: {d1.order} vs {d2.order}")
    halves = sorted({h for d in (d1, d2) for w in d.walls for h in w.half_lines()})
    for h in halves:
        if not group_equal(_half_line_factor(d1, h), _half_line_factor(d2, h)):
            return False
    if base_angle is None:
        joint = Diagram(d1.order, list(d1.walls) + list(d2.walls))
        base_angle = default_base_angle(joint)
    return group_equal(loop_product(d1, base_angle), loop_product(d2, base_angle))


# -- Kontsevich-Soibelman completion ---------------------------------------------


def cone_coordinates(m, m1, m2):
    """``(c1, c2)`` with ``m = c1 m1 + c2 m2`` as exact fractions."""
    from fractions import Fraction

    D = det(m1, m2)
    return Fraction(det(m, m2), D), Fraction(det(m1, m), D)


def ks_complete(w1, w2, order, insertion="ascending", sign_rule=orientation_sign):
    """Minimal consistent completion of two line walls modulo t^{order+1}.

    At each t-order ``k`` the loop product of the current diagram is
    ``exp(D_k)`` with ``D_k`` homogeneous of degree ``k``; its terms are
    grouped by primitive mode direction and each group is cancelled by
    extending the ray wall with that direction.
    """
    for w in (w1, w2):
        if w.support != LINE:
            raise ValueError("ks_complete takes two line walls")
    m1, m2 = w1.direction, w2.direction
    if det(m1, m2) == 0:
        raise ValueError(f"initial directions {m1} and {m2} are parallel")
    if insertion not in ("ascending", "descending"):
        raise ValueError(f"unknown insertion order {insertion!r}")
    initial = [w1.with_order(order), w2.with_order(order)]
    base_angle = None
    rays = {}
    ray_order = []
    for k in range(1, order + 1):
        rays_k = [Wall(a, RAY, rays[a].with_order(k)) for a in ray_order]
        walls_k = [w.with_order(k) for w in initial]
        walls_k = walls_k + rays_k if insertion == "ascending" else rays_k + walls_k
        dk = Diagram(k, walls_k)
        if base_angle is None:
            ref = (m1[0] + m2[0], m1[1] + m2[1])
            base_angle = default_base_angle(Diagram(order, initial), ref)
        defect = loop_product(dk, base_angle, sign_rule).log
        if defect.is_zero():
            continue
        groups = {}
        for m, j, v in defect.items():
            if j < k:
                raise InconsistencyError(f"defect z^{m} t^{j} below the current order {k}")
            c1, c2 = cone_coordinates(m, m1, m2)
            if c1 <= 0 or c2 <= 0:
                raise InconsistencyError(f"defect mode {m} lies outside the open cone of {m1}, {m2}")
            if pairing(m, v):
                raise InconsistencyError(f"defect at z^{m} has normal {v} not annihilating its mode")
            a = primitive_part(m)[0]
            groups.setdefault(a, {})[(m, j)] = v
        keys = sorted(groups, key=lambda a: (math.atan2(a[1], a[0]), a))
        if insertion == "descending":
            keys.reverse()
        for a in keys:
            sigma = sign_rule(a, (-a[0], -a[1]))
            x = LieElement(order, groups[a]).scale(-sigma)
            if a in rays:
                rays[a] = rays[a] + x
            else:
                rays[a] = x
                ray_order.append(a)
    rays_n = [Wall(a, RAY, rays[a]) for a in ray_order]
    walls = initial + rays_n if insertion == "ascending" else rays_n + initial
    return minimize(Diagram(order, walls))


def rays_of(d):
    return {w.direction: w for w in d.walls if w.support == RAY}


# -- drawing ---------------------------------------------------------------------


def diagram_svg(d, size=480):
    """Minimal SVG: one segment per half-line, labelled by angle and first order."""
    c = size / 2
    r = size * 0.42
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<circle cx="{c}" cy="{c}" r="3" fill="black"/>',
    ]
    for w in d.walls:
        low = w.log_theta.min_order()
        colour = "#1f4e9c" if w.support == LINE else "#b3261e"
        for h in w.half_lines():
            norm = math.hypot(*h)
            x = c + r * h[0] / norm
            y = c - r * h[1] / norm
            deg = math.degrees(_angle(h))
            out.append(
                f'<line x1="{c:.2f}" y1="{c:.2f}" x2="{x:.2f}" y2="{y:.2f}" '
                f'stroke="{colour}" stroke-width="2"/>'
            )
            lx = c + (r + 14) * h[0] / norm
            ly = c - (r + 14) * h[1] / norm
            out.append(
                f'<text x="{lx:.2f}" y="{ly:.2f}" font-size="11" text-anchor="middle" '
                f'font-family="monospace">{w.direction} {deg:.1f}deg t^{low}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
