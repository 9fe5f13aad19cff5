"""Reproducible Gaussian sampling primitives.

Every random draw in the package flows through a :class:`SeedSpec`: a
(master seed, replicate index) pair mapped to an independent counter-based
stream.  Identical specs give bit-identical output on every platform and
worker layout, which is what makes the parallel Monte Carlo engine
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPSD
from .grids import PathSample, SpatialGrid

# Escalation policy for the Cholesky jitter: start at JITTER_START x max
# diagonal, multiply by JITTER_STEP, give up past JITTER_CAP x max diagonal.
JITTER_START = 1e-14
JITTER_STEP = 10.0
JITTER_CAP = 1e-8

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus replicate index identifying one random stream."""

    master_seed: int
    replicate_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "replicate_index"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _UINT64_MAX:
                raise ValueError(f"{name} must be an integer in [0, 2^64)")

    def rng(self) -> np.random.Generator:
        """Counter-based generator for this replicate.

        The replicate index enters through the SeedSequence spawn key, so
        streams for distinct indices are independent by construction and no
        stream is ever shared sequentially between replicates.
        """
        ss = np.random.SeedSequence(
            entropy=int(self.master_seed), spawn_key=(int(self.replicate_index),)
        )
        return np.random.Generator(np.random.Philox(ss))

    def child(self, replicate_index: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, replicate_index)


@dataclass
class CovarianceMatrix:
    """Symmetric PSD matrix plus the jitter needed to factor it."""

    entries: np.ndarray
    jitter_applied: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("covariance must be square")
        scale = np.max(np.abs(m)) if m.size else 0.0
        if scale > 0 and np.max(np.abs(m - m.T)) > 1e-10 * scale:
            raise ValueError("covariance must be symmetric")
        self.entries = 0.5 * (m + m.T)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def jittered_cholesky(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor with escalating diagonal jitter.

    Tries the plain factorisation first; on failure adds
    ``JITTER_START * max(diag)`` and escalates by factors of ``JITTER_STEP``
    up to ``JITTER_CAP * max(diag)``.  Raises :class:`NonPSD` past the cap.
    """
    m = np.asarray(matrix, dtype=float)
    diag_scale = float(np.max(np.diag(m))) if m.size else 0.0
    if diag_scale <= 0.0:
        # all-zero (or negative-diagonal) matrix: factor is zero or invalid
        if np.max(np.abs(m)) == 0.0:
            return np.zeros_like(m), 0.0
        raise NonPSD("covariance diagonal not positive")
    jitter = 0.0
    step = JITTER_START * diag_scale
    cap = JITTER_CAP * diag_scale
    while True:
        try:
            L = np.linalg.cholesky(m + jitter * np.eye(m.shape[0]))
            return L, jitter
        except np.linalg.LinAlgError:
            jitter = step if jitter == 0.0 else jitter * JITTER_STEP
            if jitter > cap * (1 + 1e-12):
                raise NonPSD(
                    f"Cholesky failed at jitter {jitter:.3e} (cap {cap:.3e})"
                ) from None


def sample_gaussian_vector(cov: CovarianceMatrix, seed: SeedSpec) -> np.ndarray:
    """Draw one centred Gaussian vector with the given covariance.

    The draw is ``L z`` for the (jittered) Cholesky factor ``L`` and a
    standard normal ``z`` from the seed's stream; ``cov.jitter_applied``
    records the jitter that was needed.
    """
    L, jitter = jittered_cholesky(cov.entries)
    cov.jitter_applied = jitter
    z = seed.rng().standard_normal(cov.dim)
    return L @ z


def brownian_motion_covariance(grid: SpatialGrid) -> CovarianceMatrix:
    t = grid.points
    if t[0] < 0.0:
        raise ValueError("Brownian motion requires nonnegative times")
    return CovarianceMatrix(np.minimum.outer(t, t))


def brownian_bridge_covariance(grid: SpatialGrid) -> CovarianceMatrix:
    t = grid.points
    if t[0] < 0.0 or t[-1] > 1.0:
        raise ValueError("bridge grid must lie in [0, 1]")
    c = np.minimum.outer(t, t) * (1.0 - np.maximum.outer(t, t))
    return CovarianceMatrix(c)


def sample_brownian_motion(grid: SpatialGrid, seed: SeedSpec) -> PathSample:
    """Standard Brownian motion on the grid, started at w(0) = 0.

    Uses the exact increment construction: independent normals scaled by
    root spacing, cumulatively summed.  Grid points at 0 get exactly 0.
    """
    t = grid.points
    if t[0] < 0.0:
        raise ValueError("Brownian motion requires nonnegative times")
    rng = seed.rng()
    incs = np.sqrt(np.diff(np.concatenate(([0.0], t)))) * rng.standard_normal(t.size)
    return PathSample(grid, np.cumsum(incs), process="motion")


def sample_brownian_bridge(grid: SpatialGrid, seed: SeedSpec) -> PathSample:
    """Brownian bridge on [0, 1] via its covariance matrix.

    Endpoint values at t = 0 and t = 1 are set to exactly zero; interior
    points are drawn jointly from the s(1-t) covariance through
    :func:`sample_gaussian_vector`.
    """
    t = grid.points
    if t[0] < 0.0 or t[-1] > 1.0:
        raise ValueError("bridge grid must lie in [0, 1]")
    boundary = (t == 0.0) | (t == 1.0)
    values = np.zeros(t.size)
    interior = ~boundary
    if np.any(interior):
        sub = SpatialGrid(t[interior], (0.0, 1.0))
        cov = brownian_bridge_covariance(sub)
        values[interior] = sample_gaussian_vector(cov, seed)
    return PathSample(grid, values, process="bridge")


def sample_brownian_bridge_from_motion(grid: SpatialGrid, seed: SeedSpec) -> PathSample:
    """Bridge via the projection w(t) - t w(1) of a Brownian motion.

    Cross-check construction for :func:`sample_brownian_bridge`, and the
    O(n) workhorse for large Monte Carlo grids.  Exact in law.
    """
    t = grid.points
    if t[0] < 0.0 or t[-1] > 1.0:
        raise ValueError("bridge grid must lie in [0, 1]")
    if t[-1] == 1.0:
        motion = sample_brownian_motion(grid, seed)
        w = motion.values
        values = w - t * w[-1]
    else:
        aug = SpatialGrid(np.concatenate((t, [1.0])), (0.0, 1.0))
        w = sample_brownian_motion(aug, seed).values
        values = w[:-1] - t * w[-1]
    return PathSample(grid, values, process="bridge")


def circulant_embedding_weights(cov_sequence: np.ndarray) -> np.ndarray:
    """Square-root spectral weights for a stationary uniform-grid sampler.

    ``cov_sequence`` holds the covariance at lags 0..m of a stationary
    process on a uniform grid.  The sequence is mirrored into a circulant
    of even length 2m; its FFT eigenvalues must be nonnegative (tiny
    negatives from rounding are clipped, genuine ones raise NonPSD).
    """
    r = np.asarray(cov_sequence, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise ValueError("need covariance at lags 0..m with m >= 1")
    c = np.concatenate([r, r[-2:0:-1]])
    lam = np.fft.fft(c).real
    lam_max = float(np.max(lam))
    if np.min(lam) < -1e-10 * lam_max:
        raise NonPSD("circulant embedding has a negative eigenvalue")
    lam = np.clip(lam, 0.0, None)
    return np.sqrt(lam / lam.size)


def sample_stationary_values(weights: np.ndarray, seed: SeedSpec, n: int) -> np.ndarray:
    """First n values of a stationary Gaussian sequence, exact in law.

    ``weights`` comes from :func:`circulant_embedding_weights`; n must not
    exceed half the embedding length plus one (the exact block).
    """
    m = weights.size
    if n > m // 2 + 1:
        raise ValueError("requested block exceeds the exact embedding range")
    rng = seed.rng()
    zeta = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return np.fft.fft(weights * zeta).real[:n]
