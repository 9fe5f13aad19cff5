"""Seeded sampling primitives: streams, factorizations, embeddings."""

import numpy as np
import pytest

from heatlocal.grids import SpatialGrid
from heatlocal.sampling import (
    JITTER_CAP,
    CovarianceMatrix,
    SeedSpec,
    brownian_bridge_covariance,
    brownian_motion_covariance,
    circulant_embedding_weights,
    jittered_cholesky,
    sample_brownian_bridge,
    sample_brownian_bridge_from_motion,
    sample_brownian_motion,
    sample_gaussian_vector,
    sample_stationary_values,
)


def test_seed_spec_streams_are_reproducible():
    a = SeedSpec(7, 3).rng().standard_normal(16)
    b = SeedSpec(7, 3).rng().standard_normal(16)
    assert np.array_equal(a, b)


def test_seed_spec_streams_differ_across_replicates():
    a = SeedSpec(7, 0).rng().standard_normal(16)
    b = SeedSpec(7, 1).rng().standard_normal(16)
    assert not np.array_equal(a, b)


def test_seed_spec_rejects_negative_and_oversized():
    with pytest.raises(ValueError):
        SeedSpec(-1)
    with pytest.raises(ValueError):
        SeedSpec(2**64)
    with pytest.raises(ValueError):
        SeedSpec(0, -2)


def test_jittered_cholesky_exact_on_pd_matrix(rng):
    a = rng.standard_normal((6, 6))
    m = a @ a.T + 6 * np.eye(6)
    L, jitter = jittered_cholesky(m)
    assert jitter == 0.0
    assert np.allclose(L @ L.T, m, atol=1e-12)


def test_jittered_cholesky_escalates_on_singular():
    m = np.ones((3, 3))  # rank one
    L, jitter = jittered_cholesky(m)
    assert 0.0 < jitter <= JITTER_CAP * 1.0
    assert np.allclose(L @ L.T, m, atol=10 * jitter)


def test_jittered_cholesky_refuses_indefinite():
    from heatlocal.errors import NonPSD

    m = np.diag([1.0, -0.5])
    with pytest.raises(NonPSD):
        jittered_cholesky(m)


def test_gaussian_vector_determinism():
    cov = CovarianceMatrix(np.diag([1.0, 4.0]))
    x = sample_gaussian_vector(cov, SeedSpec(5))
    y = sample_gaussian_vector(cov, SeedSpec(5))
    assert np.array_equal(x, y)


def test_motion_starts_at_zero_and_matches_covariance():
    grid = SpatialGrid.uniform(0.0, 1.0, 9)
    path = sample_brownian_motion(grid, SeedSpec(11))
    assert path.values[0] == 0.0
    cov = brownian_motion_covariance(grid).entries
    assert np.allclose(np.diag(cov), grid.points)


def test_bridge_endpoints_exactly_zero():
    grid = SpatialGrid.uniform(0.0, 1.0, 17)
    for sampler in (sample_brownian_bridge, sample_brownian_bridge_from_motion):
        path = sampler(grid, SeedSpec(3))
        assert path.values[0] == 0.0
        assert path.values[-1] == 0.0


def test_bridge_covariance_matches_formula():
    grid = SpatialGrid(np.array([0.25, 0.5, 0.75]), (0.0, 1.0))
    c = brownian_bridge_covariance(grid).entries
    assert c[0, 2] == pytest.approx(0.25 * 0.25)
    assert c[1, 1] == pytest.approx(0.25)


def test_bridge_sampler_routes_agree_in_moments():
    # two exact-in-law constructions; compare the variance at mid-span
    grid = SpatialGrid.uniform(0.0, 1.0, 33)
    n = 4000
    mid = 16
    a = np.array(
        [sample_brownian_bridge(grid, SeedSpec(1, i)).values[mid] for i in range(n)]
    )
    b = np.array(
        [
            sample_brownian_bridge_from_motion(grid, SeedSpec(2, i)).values[mid]
            for i in range(n)
        ]
    )
    se = np.sqrt(np.var(a) / n + np.var(b) / n)
    assert abs(np.var(a, ddof=1) - 0.25) < 6 * np.sqrt(2.0 / n) * 0.25
    assert abs(np.mean(a) - np.mean(b)) < 5 * se


def test_circulant_embedding_reproduces_stationary_covariance():
    # AR-like decaying sequence: exp(-lag/3) is PSD enough to embed
    lags = np.arange(9)
    cov_seq = np.exp(-lags / 3.0)
    w = circulant_embedding_weights(cov_seq)
    n_rep = 6000
    sims = np.array(
        [sample_stationary_values(w, SeedSpec(9, i), 9) for i in range(n_rep)]
    )
    emp = sims.T @ sims / n_rep
    assert abs(emp[0, 0] - 1.0) < 0.08
    assert abs(emp[0, 4] - cov_seq[4]) < 0.08
    assert abs(emp[2, 6] - cov_seq[4]) < 0.08


def test_stationary_block_length_guard():
    w = circulant_embedding_weights(np.exp(-np.arange(5) / 2.0))
    with pytest.raises(ValueError):
        sample_stationary_values(w, SeedSpec(0), 6)
