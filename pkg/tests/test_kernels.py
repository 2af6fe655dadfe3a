import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scatterlab import _kernels_py as py
from scatterlab import kernels
from strategies import lie_elements, series

try:
    from scatterlab import _ckernels as cc
except ImportError:  # pragma: no cover
    cc = None

needs_compiled = pytest.mark.skipif(cc is None, reason="compiled kernels not built")
settings.register_profile("kernels", max_examples=60, deadline=None)
settings.load_profile("kernels")


def test_pack_unpack_round_trip():
    for m1, m2, j in [(0, 0, 0), (3, -2, 5), (-7, 4, 1), (-1, -1, 9)]:
        assert kernels.unpack(kernels.pack(m1, m2, j)) == (m1, m2, j)


def test_backend_is_reported():
    assert kernels.BACKEND in ("compiled", "python")


@needs_compiled
@given(series(5), series(5))
def test_series_mul_parity(a, b):
    assert cc.series_mul(a._d, b._d, 5) == py.series_mul(a._d, b._d, 5)


@needs_compiled
@given(series(5), lie_elements(5))
def test_derivation_parity_with_rational_payloads(f, x):
    d = x.derivation_terms()
    assert cc.derivation_apply(f._d, d, 5) == py.derivation_apply(f._d, d, 5)


@needs_compiled
@given(lie_elements(5), lie_elements(5))
def test_bracket_parity(x, y):
    assert cc.lie_bracket(x._d, y._d, 5) == py.lie_bracket(x._d, y._d, 5)


@needs_compiled
@given(st.integers(0, 2**16))
def test_orthant_count_parity(seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((500, 3))
    t = rng.standard_normal((2, 3))
    assert cc.orthant_count(z, t) == py.orthant_count(z, t)
