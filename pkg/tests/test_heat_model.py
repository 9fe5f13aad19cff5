"""Stationary covariance, the two simulators, and the sheet operator."""

import numpy as np
import pytest
from scipy import special

from heatlocal.errors import CutoffTooCoarse
from heatlocal.grids import SpatialGrid
from heatlocal.heat_model import (
    build_sheet_operator,
    covariance_R,
    covariance_R_quadrature,
    increment_covariance,
    path_increment_replicate,
    sheet_increment_replicate,
    sheet_variance_bias,
    simulate_solution_path,
    simulate_solution_path_fft,
    simulate_via_sheet,
)
from heatlocal.sampling import SeedSpec

SQRT_PI = np.sqrt(np.pi)


def test_covariance_at_zero_is_inverse_root_pi():
    assert covariance_R(0.0) == pytest.approx(1.0 / SQRT_PI, rel=1e-15)
    assert covariance_R(0.0) == pytest.approx(0.5641895835477563, abs=1e-15)


def test_covariance_closed_form_spot_values():
    # e^{-d^2/4}/sqrt(pi) - (d/2) erfc(d/2), written out independently
    for d in (0.3, 1.0, 2.5):
        direct = np.exp(-d * d / 4.0) / SQRT_PI - (d / 2.0) * special.erfc(d / 2.0)
        assert covariance_R(d) == pytest.approx(direct, rel=1e-14)
    assert covariance_R(1.0) == pytest.approx(0.1996412283742457, rel=1e-12)


def test_covariance_is_even_and_decaying():
    d = np.linspace(0.0, 6.0, 40)
    vals = covariance_R(d)
    assert np.array_equal(vals, covariance_R(-d))
    assert np.all(np.diff(vals) < 0.0)
    assert vals[-1] < 1e-5


def test_quadrature_oracle_matches_closed_form():
    for d in (0.0, 0.7, 1.9, 4.2):
        assert covariance_R_quadrature(d) == pytest.approx(
            float(covariance_R(d)), abs=1e-8
        )


def test_increment_covariance_reduces_to_R_combination():
    base = 0.0
    u, v = 0.8, 1.7
    expected = (
        covariance_R(u - v)
        - covariance_R(u - base)
        - covariance_R(v - base)
        + covariance_R(0.0)
    )
    assert increment_covariance(u, v, base) == pytest.approx(float(expected), rel=1e-14)


def test_increment_variance_positive_and_saturating():
    # far from the base the increment variance approaches 2 R(0)
    far = increment_covariance(40.0, 40.0, 0.0)
    assert far == pytest.approx(2.0 / SQRT_PI, rel=1e-10)


def test_cholesky_path_deterministic_and_shared_with_task():
    pts = np.array([0.5, 1.0, 1.5, 2.0])
    grid = SpatialGrid(pts, (0.0, 2.0))
    a = simulate_solution_path(grid, SeedSpec(21)).values
    b = simulate_solution_path(grid, SeedSpec(21)).values
    assert np.array_equal(a, b)
    c = path_increment_replicate(SeedSpec(21), tuple(pts), (0.0, 2.0))
    assert np.array_equal(a, c)


def test_fft_route_matches_cholesky_route_in_variance():
    grid = SpatialGrid.uniform(0.0, 2.0, 65)
    n = 3000
    idx = 48
    vals = np.array(
        [simulate_solution_path_fft(grid, SeedSpec(4, i)).values[idx] for i in range(n)]
    )
    target = float(increment_covariance(grid.points[idx], grid.points[idx], 0.0))
    se = target * np.sqrt(2.0 / n)
    assert abs(np.var(vals, ddof=1) - target) < 5 * se


def test_sheet_field_variance_deficit_equals_tail_bias():
    grid = SpatialGrid(np.array([0.4, 0.7, 1.0]), (0.0, 1.0))
    op = build_sheet_operator(grid)
    deficit = float(covariance_R(0.0)) - op.field_variance()
    assert np.all(np.abs(deficit - sheet_variance_bias(op.delta)) < 1e-9)


def test_sheet_off_diagonal_covariance_close_to_R():
    grid = SpatialGrid(np.array([0.4, 0.7, 1.0]), (0.0, 1.0))
    op = build_sheet_operator(grid)
    K = op._K
    cov = K @ K.T
    # eval points are base + grid; field covariance approximates R(u - v)
    pts = np.concatenate(([0.0], grid.points))
    for i in range(4):
        for j in range(i):
            assert cov[i, j] == pytest.approx(
                float(covariance_R(pts[i] - pts[j])), abs=1e-4
            )


def test_sheet_rejects_coarse_spatial_resolution():
    grid = SpatialGrid(np.array([0.5, 1.0]), (0.0, 1.0))
    with pytest.raises(CutoffTooCoarse):
        build_sheet_operator(grid, sheet_resolution=(64, 512))


def test_sheet_sample_deterministic_and_base_free():
    grid = SpatialGrid(np.array([0.6, 1.2]), (0.0, 2.0))
    s1 = simulate_via_sheet(grid, SeedSpec(77)).values
    s2 = simulate_via_sheet(grid, SeedSpec(77)).values
    assert np.array_equal(s1, s2)
    s3 = sheet_increment_replicate(SeedSpec(77), (0.6, 1.2), (0.0, 2.0))
    assert np.array_equal(s1, s3)


def test_sheet_increments_have_zero_at_base_grid():
    pts = np.array([0.0, 0.8, 1.6])
    grid = SpatialGrid(pts, (0.0, 2.0))
    vals = simulate_via_sheet(grid, SeedSpec(13)).values
    assert vals[0] == 0.0
