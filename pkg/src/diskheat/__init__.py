"""diskheat: numerical laboratory for volume-constrained heat source
placement on a disk.

Core question: among source densities 0 <= f <= 1 of fixed total volume,
how much heat energy does a competitor lose compared to the centered ball,
and how does the loss scale with the distance to the ball? The package
provides the radial modal solvers, rearrangement tools, control samplers,
deficit functionals, interface Hessian spectrum, and a verification CLI.
"""

from .geometry import (RadialGrid, TimeGrid, RadialField, build_radial_grid,
                       disk_integral, ball_cumulative, l1_distance)
from .stepping import BACKEND

__version__ = "0.1.0"

__all__ = [
    "RadialGrid", "TimeGrid", "RadialField", "build_radial_grid",
    "disk_integral", "ball_cumulative", "l1_distance", "BACKEND",
    "__version__",
]
