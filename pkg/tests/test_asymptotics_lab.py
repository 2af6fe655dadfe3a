import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from scatterlab.asymptotics_lab import (
    X0,
    FlowPath,
    Grid,
    GridField,
    convergence_rate,
    delta_form,
    heatmap_svg,
    homotopy_apply,
    line_integral,
    single_wall_gauge,
    transversal_integral,
    two_wall_first_correction,
    two_wall_reference,
)
from scatterlab.lattice_algebra import TruncatedSeries, series_log
from scatterlab.tropical_vertex import LieElement, normal_of

settings.register_profile("lab", max_examples=10, deadline=None)
settings.load_profile("lab")

M = (1, 1)
NU = np.array([1.0, -1.0]) / math.sqrt(2)  # rot90(-m) for m = (1, 1)


def log_one_plus(m, order):
    f = TruncatedSeries(order, {((0, 0), 0): 1, (m, 1): 1})
    return LieElement.from_series(series_log(f), normal_of(m))


def test_grid_geometry():
    g = Grid.aligned(M)
    assert g.nodes == 513 and g.h == pytest.approx(1 / 256)
    assert np.allclose(g.e2, NU)
    assert g.nearest_node(X0) == (256, 256)
    with pytest.raises(ValueError):
        g.nearest_node((5.0, 5.0))


def test_coarse_grid_rejected():
    with pytest.raises(ValueError, match="too coarse"):
        delta_form(M, 0.01, Grid.aligned(M, 513))


def test_delta_peak_value():
    hbar = 0.05
    d = delta_form(M, hbar)
    peak = np.abs(d.values).max()
    assert peak == pytest.approx((math.pi * hbar) ** -0.5, rel=1e-4)


def test_delta_integrals():
    hbar = 0.05
    assert abs(transversal_integral(M, hbar) - 1.0) < 1e-10
    d = delta_form(M, hbar)
    seg = line_integral(d, FlowPath.segment(-NU, NU, 200001))
    # the unit segment misses the tails erfc(1/sqrt(hbar))
    assert seg == pytest.approx(erf(1 / math.sqrt(hbar)), abs=1e-12)


def test_grid_line_integral_matches_analytic():
    hbar = 0.05
    d = delta_form(M, hbar)
    grid_only = GridField(d.grid, d.values, hbar, 1)
    p, q = X0 - 0.9 * NU, X0 + 0.9 * NU
    a = line_integral(d, FlowPath.segment(p, q))
    b = line_integral(grid_only, FlowPath.segment(p, q))
    assert b == pytest.approx(a, abs=1e-5)


def test_homotopy_of_delta_is_step():
    hbar = 0.05
    d = delta_form(M, hbar)
    phi = homotopy_apply(M, d, base=X0 - 0.95 * NU)
    X, Y = d.grid.points()
    u2 = X * NU[0] + Y * NU[1]
    inside = d.grid.inside()
    assert np.abs(phi.values[inside & (u2 >= 0.85)] - 1).max() < 1e-6
    assert np.abs(phi.values[inside & (u2 <= -0.85)]).max() < 1e-6


def test_path_shapes_agree_on_closed_forms():
    d = delta_form(M, 0.05)
    a = homotopy_apply(M, d, path="perp_first").values
    b = homotopy_apply(M, d, path="flow_first").values
    assert np.abs(a - b).max() < 1e-10
    with pytest.raises(ValueError):
        homotopy_apply(M, d, path="diagonal")


def test_homotopy_inverts_exterior_derivative():
    g = Grid.aligned(M, 257)
    X, Y = g.points()
    F = np.sin(2 * X) + Y**2
    A, B = g.local()
    e1, e2 = np.array(g.e1), np.array(g.e2)
    fx, fy = 2 * np.cos(2 * X), 2 * Y
    form = GridField(g, np.array([fx * e1[0] + fy * e1[1], fx * e2[0] + fy * e2[1]]), 0.05, 1)
    out = homotopy_apply(M, form).values
    assert np.abs(out - (F - F[128, 128])).max() < 1e-4


def test_misaligned_grid_rejected():
    d = delta_form((1, 0), 0.05)
    with pytest.raises(ValueError, match="aligned"):
        homotopy_apply(M, d)


def test_single_wall_first_order():
    hbar = 0.05
    res = single_wall_gauge(log_one_plus(M, 1), hbar, 1)
    assert set(res.fields) == {(1, 1)}
    assert res.plateau(1, 1, depth=0.5) == pytest.approx(1.0, abs=5e-2)
    # Gaussian tail from the base point at depth 0.95: exp(-dist^2/hbar) at dist 0.7
    phi = res.fields[(1, 1)]
    assert np.abs(phi[res.region(-1, 0.7)]).max() < 1e-4


def test_single_wall_base_must_be_in_h_minus():
    with pytest.raises(ValueError, match="H_-"):
        single_wall_gauge(log_one_plus(M, 1), 0.05, 1, base=X0 + 0.5 * NU)


def test_single_wall_rejects_mixed_modes():
    x = log_one_plus(M, 2) + LieElement.term(1, (1, 0), (0, 1), 1, 2)
    with pytest.raises(ValueError, match="single-mode"):
        single_wall_gauge(x, 0.05, 2)


def test_higher_orders_are_small_corrections():
    res = single_wall_gauge(log_one_plus(M, 3), 0.05, 3)
    for key, target in res.coefficients.items():
        assert res.fields[key][res.region(1, 0.5)].mean() == pytest.approx(float(target), abs=0.2)


@given(st.floats(0.1, 2.0), st.floats(0.2, 1.5))
def test_convergence_rate_recovers_exponent(c, p):
    hs = [0.2, 0.1, 0.05, 0.025]
    assert convergence_rate([(h, c * h**p) for h in hs]) == pytest.approx(p, abs=1e-9)


def test_convergence_rate_preconditions():
    with pytest.raises(ValueError):
        convergence_rate([(0.1, 1.0), (0.05, 0.5)])
    with pytest.raises(ValueError):
        convergence_rate([(0.05, 1.0), (0.1, 0.5), (0.2, 0.2)])
    with pytest.raises(ValueError):
        convergence_rate([(0.2, 1.0), (0.1, 0.0), (0.05, 0.2)])


def test_two_wall_matches_closed_form():
    c = 103 / 256  # a grid node on the ray
    for hbar in (0.1, 0.05):
        v = two_wall_first_correction(hbar, crossing=c)
        # trapezoid endpoint error at the crossing is O(h^2 G')
        assert v == pytest.approx(two_wall_reference(hbar, crossing=c), abs=5e-5)


def test_two_wall_example_values():
    v = two_wall_first_correction(0.05)
    assert abs(v - 1) < 0.05
    vals = [two_wall_first_correction(h) for h in (0.1, 0.05, 0.025)]
    assert vals[0] < vals[1] < vals[2] < 1


def test_two_wall_scales():
    assert two_wall_first_correction(0.05, scales=(0.0, 1.0)) == 0.0
    assert two_wall_first_correction(0.05, scales=(2.0, 1.0)) == pytest.approx(
        2 * two_wall_first_correction(0.05)
    )


def test_heatmap_svg():
    res = single_wall_gauge(log_one_plus(M, 1), 0.1, 1)
    svg = heatmap_svg(res.fields[(1, 1)], res.grid.inside(), cells=16)
    assert svg.startswith("<svg") and "<rect" in svg
