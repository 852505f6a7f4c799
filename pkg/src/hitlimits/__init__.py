"""Hitting-time statistics for interval maps.

Map families, first return maps, invariant measures and Monte Carlo
estimates of normalised hitting and return time laws.
"""

import os

# the bundled TBB is older than numba wants; OpenMP avoids the warning
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

from .intervals import Interval, IntervalSet  # noqa: E402
from .laws import EmpiricalCDF, LimitLaw, ks_distance, ks_two_sample  # noqa: E402
from .maps import PiecewiseMap, build_map, orbit  # noqa: E402

__all__ = [
    "EmpiricalCDF",
    "Interval",
    "IntervalSet",
    "LimitLaw",
    "PiecewiseMap",
    "build_map",
    "ks_distance",
    "ks_two_sample",
    "orbit",
]
__version__ = "0.1.0"
