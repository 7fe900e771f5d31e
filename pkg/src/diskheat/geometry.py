"""Radial grids, weighted quadrature, and distances for balls in R^n.

Radial functions on the ball B(0, R) are stored by their nodal values on a
uniform grid r_0 = 0 < ... < r_M = R. Integrals over the ball reduce to
one-dimensional integrals against the measure r^(n-1) dr times the measure
of the unit sphere. The quadrature weights used everywhere are the exact
first moments of the P1 hat functions against r^(n-1) dr, so integration of
piecewise-linear integrands is exact and the weights sum to R^n / n to
machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RadialGrid",
    "TimeGrid",
    "RadialField",
    "build_radial_grid",
    "disk_integral",
    "ball_cumulative",
    "l1_distance",
]

MIN_RADIAL_NODES = 16


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _power_moment(a: np.ndarray | float, b: np.ndarray | float, n: int,
                  c0: np.ndarray | float, c1: np.ndarray | float):
    """Exact integral of (c0 + c1*r) * r^(n-1) over [a, b]."""
    pa = (np.asarray(b, dtype=float) ** n - np.asarray(a, dtype=float) ** n) / n
    qa = (np.asarray(b, dtype=float) ** (n + 1)
          - np.asarray(a, dtype=float) ** (n + 1)) / (n + 1)
    return c0 * pa + c1 * qa


def _hat_weights(nodes: np.ndarray, n: int) -> np.ndarray:
    """First moments of the hat basis against r^(n-1) dr, computed exactly."""
    m = len(nodes) - 1
    dr = nodes[1] - nodes[0]
    w = np.zeros(m + 1)
    left, right = nodes[:-1], nodes[1:]
    # rising piece of hat_{j+1} on [r_j, r_{j+1}]: (r - r_j) / dr
    w[1:] += _power_moment(left, right, n, -left / dr, 1.0 / dr)
    # falling piece of hat_j on [r_j, r_{j+1}]: (r_{j+1} - r) / dr
    w[:-1] += _power_moment(left, right, n, right / dr, -1.0 / dr)
    return w


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid on [0, R] with weighted quadrature data.

    weights[j] is the exact hat-function moment against r^(n-1) dr, and
    sphere_measure is the (n-1)-dimensional measure of the unit sphere, so
    sphere_measure * sum(weights * f) integrates f over the ball.
    j_star / r_star locate the reference interface node (requests are
    snapped to the nearest node, see build_radial_grid).
    """

    R: float
    M: int
    n: int
    r_star: float
    j_star: int
    snap_displacement: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def dr(self) -> float:
        return self.R / self.M

    @property
    def unit_ball_volume(self) -> float:
        return unit_ball_volume(self.n)

    @property
    def sphere_measure(self) -> float:
        """Measure of the unit sphere S^(n-1): n * Vol(B(0,1))."""
        return self.n * self.unit_ball_volume

    @property
    def surface_const(self) -> float:
        """Isoperimetric normalization n * Vol(B(0,1))^(1/n)."""
        return self.n * self.unit_ball_volume ** (1.0 / self.n)

    @property
    def domain_volume(self) -> float:
        return self.unit_ball_volume * self.R ** self.n

    def node_masses(self) -> np.ndarray:
        """Full n-dimensional mass carried by each node."""
        return self.sphere_measure * self.weights


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, T] with the theta-scheme parameter."""

    T: float
    N: int
    theta: float = 0.5

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("time grid needs at least one step")
        if not (0.5 <= self.theta <= 1.0):
            raise ValueError("theta must lie in [0.5, 1]")
        if self.T <= 0:
            raise ValueError("horizon T must be positive")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)


@dataclass(frozen=True)
class RadialField:
    """Nodal values of a radial function on a RadialGrid."""

    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.M + 1,):
            raise ValueError(
                f"expected {self.grid.M + 1} nodal values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)


def build_radial_grid(R: float = 1.0, M: int = 256, n: int = 2,
                      r_star: float = 0.5) -> RadialGrid:
    """Build a uniform radial grid, snapping r_star to the nearest node.

    The snap displacement (snapped minus requested) is recorded on the grid
    so callers can see how far the interface moved.
    """
    if M < MIN_RADIAL_NODES:
        raise ValueError(f"M must be at least {MIN_RADIAL_NODES}, got {M}")
    if not (0.0 < r_star < R):
        raise ValueError("r_star must lie strictly inside (0, R)")
    nodes = np.linspace(0.0, R, M + 1)
    j_star = int(round(r_star / (R / M)))
    j_star = min(max(j_star, 1), M - 1)
    snapped = nodes[j_star]
    weights = _hat_weights(nodes, n)
    return RadialGrid(R=float(R), M=int(M), n=int(n), r_star=float(snapped),
                      j_star=j_star, snap_displacement=float(snapped - r_star),
                      nodes=nodes, weights=weights)


def _values(f) -> np.ndarray:
    if isinstance(f, RadialField):
        return f.values
    return np.asarray(f, dtype=float)


def disk_integral(f, grid: RadialGrid) -> float:
    """Integral of a radial (or polar-sampled) function over the ball.

    Accepts nodal values of shape (M+1,) or an angular stack of shape
    (L, M+1), in which case the angular direction is averaged with the
    rectangle rule before the radial quadrature.
    """
    v = _values(f)
    if v.ndim == 2:
        v = v.mean(axis=0)
    if v.shape != grid.nodes.shape:
        raise ValueError("field shape does not match the grid")
    return grid.sphere_measure * float(np.dot(grid.weights, v))


def ball_cumulative(f, grid: RadialGrid, r: float) -> float:
    """Integral of the P1 interpolant of f over the centered ball B(0, r).

    Exact for the piecewise-linear interpolant, including the partial cell
    containing r, so the result is continuous and nondecreasing in r for
    nonnegative f.
    """
    v = _values(f)
    if v.shape != grid.nodes.shape:
        raise ValueError("field shape does not match the grid")
    r = float(min(max(r, 0.0), grid.R))
    nodes = grid.nodes
    dr = grid.dr
    n = grid.n
    k = int(np.searchsorted(nodes, r, side="right") - 1)
    k = min(k, grid.M - 1)
    total = 0.0
    if k > 0:
        left, right = nodes[:k], nodes[1:k + 1]
        slope = (v[1:k + 1] - v[:k]) / dr
        c0 = v[:k] - slope * left
        total += float(np.sum(_power_moment(left, right, n, c0, slope)))
    if r > nodes[k]:
        slope = (v[k + 1] - v[k]) / dr
        c0 = v[k] - slope * nodes[k]
        total += float(_power_moment(nodes[k], r, n, c0, slope))
    return grid.sphere_measure * total


def l1_distance(f, g, grid: RadialGrid) -> float:
    """Weighted L1 distance between two fields on the same grid.

    Radial inputs use the nodal quadrature directly; polar stacks of shape
    (L, M+1) are averaged over the angle with the rectangle rule, which is
    the same convention the sampling code uses for masses.
    """
    a, b = _values(f), _values(g)
    if a.ndim != b.ndim:
        if a.ndim == 1:
            a = np.broadcast_to(a, b.shape)
        elif b.ndim == 1:
            b = np.broadcast_to(b, a.shape)
    diff = np.abs(a - b)
    if diff.ndim == 2:
        diff = diff.mean(axis=0)
    if diff.shape != grid.nodes.shape:
        raise ValueError("field shapes do not match the grid")
    return grid.sphere_measure * float(np.dot(grid.weights, diff))
