"""Spatial grids and sampled paths.

A :class:`SpatialGrid` is a strictly increasing set of points inside a fixed
interval; a :class:`PathSample` binds one realisation of a process to its
grid.  Both are plain containers shared by the simulators and the local-time
estimators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SpatialGrid:
    """Strictly increasing evaluation points inside a closed interval.

    Parameters
    ----------
    points : array_like
        Grid points, strictly increasing.
    interval : tuple of float
        The ambient interval (left endpoint, right endpoint).  Points must
        lie inside it.
    """

    points: np.ndarray
    interval: tuple[float, float]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        lo, hi = self.interval
        if not lo < hi:
            raise ValueError(f"empty interval {self.interval}")
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("points must be a nonempty 1-d array")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("grid points must be strictly increasing")
        if pts[0] < lo - 1e-12 or pts[-1] > hi + 1e-12:
            raise ValueError("grid points fall outside the interval")

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def max_spacing(self) -> float:
        if self.points.size < 2:
            return 0.0
        return float(np.max(np.diff(self.points)))

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        d = np.diff(self.points)
        if d.size == 0:
            return True
        return bool(np.max(np.abs(d - d[0])) <= rtol * d[0])

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int) -> "SpatialGrid":
        return cls(np.linspace(lo, hi, n), (lo, hi))


@dataclass(frozen=True)
class PathSample:
    """One sampled path: values aligned with ``grid.points``.

    ``process`` records which model produced the path ("heat", "bridge",
    "motion"); estimators that need the tag read it from here.
    """

    grid: SpatialGrid
    values: np.ndarray
    process: str = field(default="heat")

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.grid.points.shape:
            raise ValueError("values and grid points must have equal shape")
