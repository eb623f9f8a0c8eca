import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpkit.constants import DEFAULT, PhysicalConstants, fm_to_natural, from_eV, natural_to_fm, to_eV
from vpkit.grid import RadialFunction, RadialGrid, build_grid, gauss_panels


def test_default_constants_in_range():
    assert 0.00729 < DEFAULT.alpha < 0.00730
    assert 510998 < DEFAULT.electron_rest_energy_eV < 511000
    assert 386.1 < DEFAULT.fm_per_natural_length < 386.2


def test_out_of_range_constant_rejected():
    with pytest.raises(ValueError):
        PhysicalConstants(alpha=0.01)
    with pytest.raises(ValueError):
        DEFAULT.with_overrides(fm_per_natural_length=1.0)


def test_to_eV_examples():
    assert to_eV(0.0) == 0.0
    assert to_eV(1.0) == pytest.approx(510998.95, abs=0.05)
    assert to_eV(-1.831e-4) == pytest.approx(-93.57, abs=0.1)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).filter(lambda x: x != 0.0))
def test_eV_round_trip(x):
    assert from_eV(to_eV(x)) == pytest.approx(x, rel=1e-14)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_length_round_trip(x):
    assert natural_to_fm(fm_to_natural(x)) == pytest.approx(x, rel=1e-14)


def test_log_grid_spans_bounds():
    g = build_grid(1e-6, 10.0, 16, scheme="log")
    assert len(g) == 16
    assert g.r_min == 1e-6 and g.r_max == 10.0
    assert np.all(np.diff(g.points) > 0)


def test_r_squared_integral():
    g = build_grid(0.001, 1.0, 2000)
    assert g.integrate(g.points**2) == pytest.approx((1 - 1e-9) / 3, rel=1e-8)


def test_exponential_integral():
    g = build_grid(1e-6, 50.0, 4000)
    assert g.integrate(np.exp(-2 * g.points)) == pytest.approx(0.5 * math.exp(-2e-6), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    r_min=st.floats(min_value=1e-7, max_value=1e-2),
    span=st.floats(min_value=2.0, max_value=1e4),
    n=st.integers(min_value=1000, max_value=3000),
    scheme=st.sampled_from(["log", "log_linear"]),
    k=st.sampled_from([0, 1, 2]),
)
def test_polynomial_quadrature(r_min, span, n, scheme, k):
    r_max = r_min * span + 1.0
    g = build_grid(r_min, r_max, n, scheme=scheme)
    exact = (r_max ** (k + 1) - r_min ** (k + 1)) / (k + 1)
    assert g.integrate(g.points**k) == pytest.approx(exact, rel=1e-8)


def test_large_span_log_linear_grid():
    g = build_grid(1e-7, 1e4, 4000)
    assert g.r_max == 1e4
    assert np.all(np.isfinite(g.points)) and np.all(np.diff(g.points) > 0)
    assert g.integrate(np.ones(len(g))) == pytest.approx(1e4 - 1e-7, rel=1e-10)


def test_breakpoint_is_node_and_splits_quadrature():
    R = 0.0195
    g = build_grid(1e-7, 5.0, 1000, breakpoints=(R,))
    (b,) = g.breakpoints
    assert g.points[b] == R
    kink = np.where(g.points < R, 3 - (g.points / R) ** 2, 2 * R / g.points)
    a = 1e-7
    exact = 3 * (R - a) - (R**3 - a**3) / (3 * R**2) + 2 * R * math.log(5.0 / R)
    assert g.integrate(kink) == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize("args", [(0.0, 1.0, 100), (1.0, 0.5, 100), (1e-3, 1.0, 15), (1e-3, np.inf, 100)])
def test_invalid_grid_arguments(args):
    with pytest.raises(ValueError):
        build_grid(*args)


def test_unknown_scheme():
    with pytest.raises(ValueError):
        build_grid(1e-3, 1.0, 100, scheme="linear")


def test_grid_rejects_unsorted_points():
    with pytest.raises(ValueError):
        RadialGrid(np.array([1.0, 0.5, 2.0]), np.ones(3))


def test_cumulative_matches_antiderivative():
    g = build_grid(1e-4, 10.0, 1500)
    c = g.cumulative(np.exp(-g.points))
    assert np.allclose(c, np.exp(-1e-4) - np.exp(-g.points), rtol=0, atol=1e-9)


def test_radial_function_checks():
    g = build_grid(1e-3, 1.0, 32)
    with pytest.raises(ValueError):
        RadialFunction(g, np.ones(31))
    with pytest.raises(ValueError):
        RadialFunction(g, np.full(32, np.nan))


def test_cubic_interpolation_exact_for_cubics():
    g = build_grid(1e-3, 2.0, 64)
    f = RadialFunction(g, 1 + g.points - 2 * g.points**3)
    x = np.linspace(0.01, 1.99, 57)
    assert np.allclose(f(x), 1 + x - 2 * x**3, atol=1e-12)


@given(st.lists(st.floats(min_value=1e-3, max_value=1.0), min_size=1, max_size=20))
def test_interpolation_deterministic(xs):
    g = build_grid(1e-3, 1.0, 64)
    f = RadialFunction(g, np.sin(g.points))
    assert np.array_equal(f(np.array(xs)), f(np.array(xs)))


def test_radial_function_arithmetic_keeps_exact_evaluator():
    g = build_grid(1e-3, 1.0, 64)
    a = RadialFunction(g, g.points, exact=lambda r: np.asarray(r))
    b = RadialFunction(g, 2 * g.points, exact=lambda r: 2 * np.asarray(r))
    c = a + 3.0 * b
    assert c(0.123456) == pytest.approx(7 * 0.123456, rel=1e-15)
    assert np.allclose((a - a).values, 0.0)


def test_gauss_panels_resolve_log_endpoint():
    x, w = gauss_panels([0.0, 1.0], order=16, grade_to=(0.0,), depth=40)
    assert np.dot(w, np.log(x)) == pytest.approx(-1.0, rel=1e-12)
