from fractions import Fraction

import pytest
from hypothesis import given, settings

from scatterlab.lattice_algebra import (
    Q,
    TruncatedSeries,
    as_rational,
    det,
    pairing,
    primitive_part,
    series_exp,
    series_inv,
    series_log,
)
from strategies import series, unit_series

N = 4
settings.register_profile("algebra", max_examples=60, deadline=None)
settings.load_profile("algebra")


def mono(m, j, c=1, order=N):
    return TruncatedSeries.monomial(m, j, c, order)


def test_lattice_helpers():
    assert pairing((1, 2), (3, -1)) == 1
    assert det((1, 0), (0, 1)) == 1
    assert primitive_part((4, -6)) == ((2, -3), 2)
    with pytest.raises(ValueError):
        primitive_part((0, 0))


def test_floats_rejected_strings_accepted():
    with pytest.raises(TypeError):
        as_rational(0.5)
    assert as_rational("3/4") == Q(3, 4)


def test_truncation_drops_high_orders():
    s = TruncatedSeries(2, {((1, 0), 3): 1, ((1, 0), 2): 2})
    assert s.terms == {((1, 0), 2): Q(2)}
    assert (mono((1, 0), 2, 1, 2) * mono((0, 1), 1, 1, 2)).is_zero()


def test_order_mismatch_rejected():
    with pytest.raises(ValueError):
        mono((1, 0), 1, 1, 2) + mono((1, 0), 1, 1, 3)


def test_log_of_one_plus_tx_is_mercator():
    f = TruncatedSeries(3, {((0, 0), 0): 1, ((1, 0), 1): 1})
    assert series_log(f).terms == {((1, 0), 1): Q(1), ((2, 0), 2): Q(-1, 2), ((3, 0), 3): Q(1, 3)}


def test_inverse_of_one_plus_ty():
    f = TruncatedSeries(2, {((0, 0), 0): 1, ((0, 1), 1): 1})
    assert series_inv(f).terms == {((0, 0), 0): Q(1), ((0, 1), 1): Q(-1), ((0, 2), 2): Q(1)}


def test_log_needs_unit_and_names_offending_term():
    with pytest.raises(ValueError, match="constant term 1"):
        series_log(mono((1, 0), 1))
    bad = TruncatedSeries.one(N) + mono((1, 0), 0)
    with pytest.raises(ValueError, match=r"z\^\(1, 0\)"):
        series_log(bad)
    with pytest.raises(ValueError, match="carry t"):
        series_exp(mono((1, 0), 0))


def test_json_round_trip_is_exact():
    s = TruncatedSeries(3, {((2, -1), 1): Fraction(7, 3), ((0, 0), 0): 1})
    back = TruncatedSeries.from_json(s.to_json())
    assert back == s
    assert s.to_json()["terms"][0] == {"m": [0, 0], "j": 0, "num": "1", "den": "1"}
    with pytest.raises(ValueError):
        TruncatedSeries.from_json({"order": 1})


@given(series(N), series(N), series(N))
def test_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a + TruncatedSeries.zero(N) == a
    assert a * TruncatedSeries.one(N) == a


@given(series(N, min_j=1))
def test_log_exp_round_trip(a):
    assert series_log(series_exp(a)) == a


@given(unit_series(N))
def test_exp_log_round_trip_and_inverse(f):
    assert series_exp(series_log(f)) == f
    assert f * series_inv(f) == TruncatedSeries.one(N)
