"""Simulation and verification toolkit for a heat-field Gaussian process.

Submodules:

* ``sampling``: seeded Gaussian sampling primitives (Cholesky, circulant).
* ``heat_model``: the stationary field covariance and two independent
  simulators of its increment process.
* ``spectral``: the integrator quadratic form and its inequalities.
* ``gram``: Gram determinants, projection identities, simplex integrals.
* ``local_time``: kernel-smoothed occupation estimators and exact moments.
* ``mc``: the reproducible parallel Monte Carlo engine.
* ``verify``: the claim-by-claim verification suite.
* ``cli``: command-line entry point.
"""

from ._version import __version__
from .errors import (
    BandwidthTooSmall,
    BasisNotOrthonormal,
    ConfigError,
    CutoffTooCoarse,
    DegenerateFamily,
    HeatLocalError,
    NearSingular,
    NonPositiveA,
    NonPositiveTime,
    NonPSD,
    OrderViolation,
    ReplicateFailure,
    SingularCovariance,
    SupportTooLong,
    UnknownProcess,
    UnsupportedOrder,
)
from .grids import PathSample, SpatialGrid
from .sampling import SeedSpec
from .mc import MCResult, RunConfig, default_config, run_replicates
from .reports import SuiteReport
from .verify import verify_all

__all__ = [
    "__version__",
    "BandwidthTooSmall",
    "BasisNotOrthonormal",
    "ConfigError",
    "CutoffTooCoarse",
    "DegenerateFamily",
    "HeatLocalError",
    "NearSingular",
    "NonPositiveA",
    "NonPositiveTime",
    "NonPSD",
    "OrderViolation",
    "ReplicateFailure",
    "SingularCovariance",
    "SupportTooLong",
    "UnknownProcess",
    "UnsupportedOrder",
    "PathSample",
    "SpatialGrid",
    "SeedSpec",
    "MCResult",
    "RunConfig",
    "SuiteReport",
    "default_config",
    "run_replicates",
    "verify_all",
]
