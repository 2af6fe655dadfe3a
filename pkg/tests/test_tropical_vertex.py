import pytest
from hypothesis import given, settings

from scatterlab.lattice_algebra import Q, TruncatedSeries, rational_from_json
from scatterlab.tropical_vertex import (
    GroupElement,
    LieElement,
    apply_automorphism,
    bch,
    bracket,
    compose,
    group_equal,
    normal_of,
)
from strategies import lie_elements, series

settings.register_profile("vertex", max_examples=40, deadline=None)
settings.load_profile("vertex")


def T(c, m, n, j, order=3):
    return LieElement.term(c, m, n, j, order)


def test_normal_choice():
    assert normal_of((1, 0)) == (0, 1)
    assert normal_of((0, 1)) == (-1, 0)
    assert normal_of((2, 2)) == (-1, 1)


def test_membership_enforced():
    with pytest.raises(ValueError, match="not zero"):
        T(1, (1, 0), (1, 0), 1)
    with pytest.raises(ValueError, match="t-order"):
        T(1, (1, 0), (0, 1), 0)
    with pytest.raises(ValueError, match="nonzero mode"):
        T(1, (0, 0), (0, 1), 1)


def test_bracket_golden():
    # (m', n) = 1 and (m, n') = -1, so the payload is n' + n
    x = T(1, (1, 0), (0, 1), 1)
    y = T(1, (0, 1), (-1, 0), 1)
    assert bracket(x, y).terms == {((1, 1), 2): (Q(-1), Q(1))}


def test_bch_second_order_golden():
    x = T(1, (1, 0), (0, 1), 1, 2)
    y = T(1, (0, 1), (-1, 0), 1, 2)
    expected = x + y + LieElement.term(Q(1, 2), (1, 1), (-1, 1), 2, 2)
    assert bch(x, y) == expected
    assert bch(x, y) != bch(y, x)


def test_automorphism_golden():
    # exp(t z^(1,0) d_(0,1)) z^(0,1) = z^(0,1) + t z^(1,1) + 1/2 t^2 z^(2,1)
    g = GroupElement(T(1, (1, 0), (0, 1), 1, 2))
    f = TruncatedSeries.monomial((0, 1), 0, 1, 2)
    assert apply_automorphism(g, f).terms == {
        ((0, 1), 0): Q(1),
        ((1, 1), 1): Q(1),
        ((2, 1), 2): Q(1, 2),
    }


def test_order_mismatch():
    with pytest.raises(ValueError):
        bracket(T(1, (1, 0), (0, 1), 1, 2), T(1, (1, 0), (0, 1), 1, 3))


def test_json_round_trip():
    x = T(Q(3, 2), (2, 1), (-1, 2), 2) + T(-1, (0, 1), (-1, 0), 1)
    obj = x.to_json()
    assert LieElement.from_json(obj) == x
    normals = {tuple(rational_from_json(c) for c in t["n"]) for t in obj["terms"]}
    assert normals == {(-1, 2), (-1, 0)}


@given(lie_elements(5), lie_elements(5))
def test_antisymmetry(x, y):
    assert bracket(x, y) == -bracket(y, x)


@given(lie_elements(5, 3), lie_elements(5, 3), lie_elements(5, 3))
def test_jacobi(x, y, z):
    total = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y))
    assert total.is_zero()


@given(lie_elements(4), lie_elements(4), series(4))
def test_bch_is_composition(x, y, f):
    gx, gy = GroupElement(x), GroupElement(y)
    assert apply_automorphism(gx * gy, f) == apply_automorphism(gx, apply_automorphism(gy, f))


@given(lie_elements(4), series(4), series(4))
def test_automorphism_is_ring_homomorphism(x, f, g):
    assert apply_automorphism(x, f * g) == apply_automorphism(x, f) * apply_automorphism(x, g)


@given(lie_elements(4), lie_elements(4), lie_elements(4))
def test_group_axioms(x, y, z):
    a, b, c = GroupElement(x), GroupElement(y), GroupElement(z)
    assert group_equal((a * b) * c, a * (b * c))
    assert (a * a.inverse()).log.is_zero()
    assert group_equal(compose(a, b, c), a * b * c)


@given(lie_elements(5))
def test_bch_with_self_is_double(x):
    assert bch(x, x) == x.scale(2)
