"""The fixed-time solution field of the white-noise heat equation.

At observation time 1 the solution is a centred stationary Gaussian field
with covariance

    R(d) = exp(-d^2/4)/sqrt(pi) - (|d|/2) erfc(|d|/2),

obtained by integrating the squared heat kernel over the driving time.  The
objects of interest are increments of that field relative to the left
endpoint of an interval, sampled either through the increment covariance
matrix or through a discretised driving sheet.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import CutoffTooCoarse, NonPositiveTime
from .grids import PathSample, SpatialGrid
from .sampling import (
    CovarianceMatrix,
    SeedSpec,
    circulant_embedding_weights,
    jittered_cholesky,
    sample_gaussian_vector,
    sample_stationary_values,
)

SQRT_PI = np.sqrt(np.pi)

__all__ = [
    "SQRT_PI",
    "HeatCovariance",
    "heat_kernel",
    "covariance_R",
    "covariance_R_quadrature",
    "increment_covariance",
    "increment_covariance_matrix",
    "simulate_solution_path",
    "simulate_solution_path_fft",
    "SheetOperator",
    "build_sheet_operator",
    "simulate_via_sheet",
    "sheet_variance_bias",
    "path_increment_replicate",
    "sheet_increment_replicate",
]


def heat_kernel(t: float, u) -> np.ndarray:
    """Gaussian heat kernel p_t(u) = exp(-u^2/(2t)) / sqrt(2 pi t)."""
    if t <= 0.0:
        raise NonPositiveTime(f"heat kernel needs t > 0, got {t}")
    u = np.asarray(u, dtype=float)
    return np.exp(-u * u / (2.0 * t)) / np.sqrt(2.0 * np.pi * t)


def covariance_R(d) -> np.ndarray:
    """Stationary covariance of the time-1 solution field at lag d.

    Closed form; its agreement with the brute-force double quadrature
    :func:`covariance_R_quadrature` is enforced by the test suite, not by a
    runtime branch.  R(0) = 1/sqrt(pi).
    """
    d = np.abs(np.asarray(d, dtype=float))
    return np.exp(-d * d / 4.0) / SQRT_PI - (d / 2.0) * special.erfc(d / 2.0)


def covariance_R_quadrature(d: float, n_time: int = 240, n_space: int = 96) -> float:
    """Brute-force oracle for :func:`covariance_R`.

    Integrates p_{1-s}(u-v) p_{1-s}(u'-v) over v and s directly, with the
    substitution s = 1 - tau^2 to flatten the endpoint and a spatial window
    that tracks the kernel-product width 12 sqrt(t/2) around its centre.
    """
    d = float(abs(d))
    xt, wt = np.polynomial.legendre.leggauss(n_time)
    tau = 0.5 * (xt + 1.0)
    wtau = 0.5 * wt
    xv, wv = np.polynomial.legendre.leggauss(n_space)
    total = 0.0
    for t_, w_ in zip(tau, wtau):
        t = t_ * t_
        if t == 0.0:
            continue
        half = 12.0 * np.sqrt(t / 2.0)
        v = d / 2.0 + half * xv
        k1 = np.exp(-v * v / (2.0 * t))
        k2 = np.exp(-(d - v) ** 2 / (2.0 * t))
        inner = half * np.sum(wv * k1 * k2) / (2.0 * np.pi * t)
        total += w_ * 2.0 * t_ * inner
    return total


def increment_covariance(u, v, base: float) -> np.ndarray:
    """Covariance of field increments taken from the base point.

    Cov(x(u) - x(base), x(v) - x(base)) expressed through R; vanishes
    whenever u or v equals the base.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return (
        covariance_R(u - v)
        - covariance_R(u - base)
        - covariance_R(v - base)
        + covariance_R(0.0)
    )


@dataclass(frozen=True)
class HeatCovariance:
    """Callable stationary covariance of the time-1 field.

    The observation time is fixed at 1; there are no free parameters.
    """

    def __call__(self, d):
        return covariance_R(d)

    @property
    def at_zero(self) -> float:
        return float(covariance_R(0.0))


def increment_covariance_matrix(grid: SpatialGrid) -> CovarianceMatrix:
    """Increment covariance of the field on the grid, base = interval start."""
    base = grid.interval[0]
    pts = grid.points
    return CovarianceMatrix(increment_covariance(pts[:, None], pts[None, :], base))


def simulate_solution_path(grid: SpatialGrid, seed: SeedSpec) -> PathSample:
    """Sample the increment field on the grid via its covariance matrix.

    Grid points equal to the interval start get exactly zero (they have
    zero variance); the rest are drawn jointly through the Cholesky route.
    Intended for modest grids; use :func:`simulate_solution_path_fft` for
    large uniform ones.
    """
    base = grid.interval[0]
    pts = grid.points
    pinned = pts == base
    values = np.zeros(pts.size)
    free = ~pinned
    if np.any(free):
        sub = SpatialGrid(pts[free], grid.interval)
        cov = CovarianceMatrix(
            increment_covariance(pts[free][:, None], pts[free][None, :], base)
        )
        values[free] = sample_gaussian_vector(cov, seed)
    return PathSample(grid, values, process="heat")


@lru_cache(maxsize=8)
def _embedding_weights(n: int, spacing: float) -> np.ndarray:
    # pad to a power of two: keeps the FFT fast and the first n x n block exact
    m = 1
    while m < 2 * (n - 1):
        m *= 2
    lags = np.arange(m // 2 + 1) * spacing
    return circulant_embedding_weights(covariance_R(lags))


def simulate_solution_path_fft(grid: SpatialGrid, seed: SeedSpec) -> PathSample:
    """Exact increment-field sample on a uniform grid in O(n log n).

    Samples the stationary field by circulant embedding (the covariance
    sequence is convex and decreasing, so the embedding is PSD) and
    subtracts the value at the first grid point.  The grid must be uniform
    and start at the interval's left endpoint.
    """
    if not grid.is_uniform():
        raise ValueError("FFT route needs a uniform grid")
    if grid.points[0] != grid.interval[0]:
        raise ValueError("FFT route needs the grid to start at the interval base")
    n = grid.size
    spacing = float(grid.points[1] - grid.points[0])
    weights = _embedding_weights(n, spacing)
    x = sample_stationary_values(weights, seed, n)
    return PathSample(grid, x - x[0], process="heat")


class SheetOperator:
    """Linear map from iid cell noise to field values on a grid.

    Discretises the driving space-time white noise into rectangular cells
    (time rows refined toward the observation time by a square-root
    substitution) and precomputes the kernel weights

        K[g, cell] = p_{1-s}(u_g - v) sqrt(dv ds).

    The simulated field is K z for z standard normal, so its covariance is
    exactly K K^T: the Riemann-sum approximation of the field covariance
    truncated delta short of the observation time.
    """

    def __init__(
        self,
        grid: SpatialGrid,
        sheet_resolution: tuple[int, int],
        spatial_cutoff: float,
        time_cutoff: float,
    ):
        if time_cutoff <= 0.0 or time_cutoff >= 1.0:
            raise ValueError("time cutoff must be in (0, 1)")
        n_time, n_space = sheet_resolution
        if n_time < 2 or n_space < 2:
            raise ValueError("need at least 2 cells per direction")
        pts = grid.points
        base = grid.interval[0]
        eval_pts = pts if pts[0] == base else np.concatenate(([base], pts))
        self.grid = grid
        self.delta = float(time_cutoff)
        self._has_base = pts[0] == base
        self._eval_pts = eval_pts

        # time rows: uniform in rho = sqrt(1 - s), midpoint evaluation
        rho = np.linspace(np.sqrt(self.delta), 1.0, n_time + 1)
        ds = rho[1:] ** 2 - rho[:-1] ** 2
        rho_mid = 0.5 * (rho[1:] + rho[:-1])
        t_mid = rho_mid**2  # time-to-observation of each row

        # spatial columns: uniform cells covering the grid plus the cutoff pad
        lo = eval_pts[0] - spatial_cutoff
        hi = eval_pts[-1] + spatial_cutoff
        edges = np.linspace(lo, hi, n_space + 1)
        dv = edges[1] - edges[0]
        v_mid = 0.5 * (edges[1:] + edges[:-1])

        # smallest kernel width must stay resolved by the spatial cells:
        # the Riemann-sum aliasing error of a row scales like
        # exp(-pi^2 t / dv^2), so dv <= sqrt(delta) keeps every row below
        # 1e-4 relative and the thin near-cutoff rows contribute ~1e-8
        min_width = np.sqrt(self.delta)
        if dv > min_width:
            raise CutoffTooCoarse(
                f"spatial cell {dv:.4g} too wide for kernel width {min_width:.4g}"
            )

        K = np.empty((eval_pts.size, n_time * n_space))
        for j, (t, w) in enumerate(zip(t_mid, ds)):
            block = heat_kernel(t, eval_pts[:, None] - v_mid[None, :])
            K[:, j * n_space : (j + 1) * n_space] = block * np.sqrt(dv * w)
        self._K = K
        self.n_cells = K.shape[1]

    def sample_field(self, seed: SeedSpec) -> np.ndarray:
        """Undifferenced field values at the evaluation points (base first)."""
        z = seed.rng().standard_normal(self.n_cells)
        # einsum keeps the reduction single-threaded and bit-reproducible
        return np.einsum("ij,j->i", self._K, z)

    def sample(self, seed: SeedSpec) -> PathSample:
        """Increment field on the grid: sheet values minus the base value."""
        field = self.sample_field(seed)
        if self._has_base:
            values = field - field[0]
        else:
            values = field[1:] - field[0]
        return PathSample(self.grid, values, process="heat")

    def field_variance(self) -> np.ndarray:
        """Exact per-point variance of the discretised field (rows of K K^T)."""
        return np.einsum("ij,ij->i", self._K, self._K)


@lru_cache(maxsize=8)
def _increment_cholesky(points: tuple, interval: tuple) -> np.ndarray:
    pts = np.array(points)
    base = interval[0]
    cov = CovarianceMatrix(increment_covariance(pts[:, None], pts[None, :], base))
    L, _ = jittered_cholesky(cov.entries)
    return L


def path_increment_replicate(seed: SeedSpec, points: tuple, interval: tuple) -> np.ndarray:
    """One Cholesky-route increment sample as a Monte Carlo task.

    Identical in output to :func:`simulate_solution_path` on a grid with no
    point at the interval base; the factor is cached per process so large
    replicate counts do not refactor the same matrix.
    """
    L = _increment_cholesky(tuple(points), tuple(interval))
    z = seed.rng().standard_normal(L.shape[0])
    return L @ z


@lru_cache(maxsize=4)
def _sheet_operator_cached(
    points: tuple,
    interval: tuple,
    sheet_resolution: tuple,
    spatial_cutoff: float,
    time_cutoff: float,
) -> SheetOperator:
    grid = SpatialGrid(np.array(points), interval)
    return SheetOperator(grid, sheet_resolution, spatial_cutoff, time_cutoff)


def sheet_increment_replicate(
    seed: SeedSpec,
    points: tuple,
    interval: tuple,
    sheet_resolution: tuple = (128, 2304),
    spatial_cutoff: float = 6.0 * np.sqrt(2.0),
    time_cutoff: float = 1e-4,
) -> np.ndarray:
    """One sheet-route increment sample as a Monte Carlo task.

    The operator is built once per process and cached; only the constructor
    parameters travel with the task, which keeps worker pickling cheap.
    """
    op = _sheet_operator_cached(
        tuple(points),
        tuple(interval),
        tuple(sheet_resolution),
        float(spatial_cutoff),
        float(time_cutoff),
    )
    return op.sample(seed).values


def sheet_variance_bias(time_cutoff: float) -> float:
    """Field-variance deficit caused by stopping delta short in time.

    Equals the tail integral of the squared-kernel mass: sqrt(delta)/sqrt(pi).
    """
    return float(np.sqrt(time_cutoff) / SQRT_PI)


def build_sheet_operator(
    grid: SpatialGrid,
    sheet_resolution: tuple[int, int] = (128, 2304),
    spatial_cutoff: float = 6.0 * np.sqrt(2.0),
    time_cutoff: float = 1e-4,
) -> SheetOperator:
    return SheetOperator(grid, sheet_resolution, spatial_cutoff, time_cutoff)


def simulate_via_sheet(
    grid: SpatialGrid,
    seed: SeedSpec,
    sheet_resolution: tuple[int, int] = (128, 2304),
    spatial_cutoff: float = 6.0 * np.sqrt(2.0),
    time_cutoff: float = 1e-4,
    bias_tolerance: float | None = None,
) -> PathSample:
    """Increment field sampled from the discretised driving sheet.

    Independent of the covariance route: the only inputs are the heat
    kernel and cell noise.  The documented variance bias of the
    undifferenced field is sqrt(time_cutoff)/sqrt(pi); if ``bias_tolerance``
    is given and the predicted bias exceeds it, CutoffTooCoarse is raised.
    """
    if bias_tolerance is not None and sheet_variance_bias(time_cutoff) > bias_tolerance:
        raise CutoffTooCoarse(
            f"time cutoff {time_cutoff:.3e} gives predicted bias "
            f"{sheet_variance_bias(time_cutoff):.3e} > {bias_tolerance:.3e}"
        )
    op = SheetOperator(grid, sheet_resolution, spatial_cutoff, time_cutoff)
    return op.sample(seed)
