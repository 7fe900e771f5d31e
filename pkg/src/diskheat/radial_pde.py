"""Theta-scheme solvers for the modal radial heat equation on the ball.

Each angular mode k satisfies a one-dimensional parabolic equation in r
with the operator u -> (r^(n-1) u')' / r^(n-1) - k^2 u / r^2, homogeneous
Dirichlet data at r = R, and either a zero-flux condition (k = 0) or a
pinned value (k >= 1) at r = 0. Space is discretized with the P1 stiffness
form in flux variables and lumped hat-moment masses, so one step reads

    (W + dt*theta*K) u^{m+1} = (W - dt*(1-theta)*K) u^m + dt*load^m.

Both matrices are symmetric tridiagonal and constant in time, which makes
the backward solver an exact algebraic transpose of the forward one (the
march is simply reversed), and the discrete space-time duality identity
holds to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import RadialGrid, RadialField, TimeGrid
from .stepping import theta_march

__all__ = [
    "SpaceTimeField",
    "ModalProblem",
    "solve_forward",
    "solve_backward",
    "solve_jump_forward",
    "normal_derivative_at",
    "time_integral",
]


@dataclass(frozen=True)
class SpaceTimeField:
    """Nodal space-time values of one angular mode, shape (N+1, M+1).

    Pinned columns (r = R always; r = 0 for modes k >= 1) are stored as
    zeros so the array covers the whole grid.
    """

    grid: RadialGrid
    tgrid: TimeGrid
    mode: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        expect = (self.tgrid.N + 1, self.grid.M + 1)
        if v.shape != expect:
            raise ValueError(f"expected values of shape {expect}, got {v.shape}")
        object.__setattr__(self, "values", v)

    def slice_at(self, t_index: int) -> RadialField:
        return RadialField(self.grid, self.values[t_index])


@dataclass(frozen=True)
class ModalProblem:
    """Data for one modal solve.

    source may be None, a radial profile (M+1,), or a space-time table
    (N+1, M+1). initial seeds forward solves, terminal seeds backward
    solves. jump_strength q adds a distributional ring source of strength
    q * r_star^(n-1) at the interface node, which makes the radial
    derivative of the solution drop by q across r_star.
    """

    grid: RadialGrid
    tgrid: TimeGrid
    mode: int = 0
    source: np.ndarray | RadialField | None = None
    initial: np.ndarray | RadialField | None = None
    terminal: np.ndarray | RadialField | None = None
    jump_strength: float = 0.0

    def __post_init__(self):
        if self.mode < 0:
            raise ValueError("mode must be nonnegative")


def active_range(grid: RadialGrid, mode: int) -> tuple[int, int]:
    """Unknown node index range [lo, hi) for a mode; the rest is pinned."""
    return (0 if mode == 0 else 1), grid.M


def operator_bands(grid: RadialGrid, mode: int):
    """Symmetric tridiagonal stiffness bands on the active nodes.

    Face conductances are the exact cell means of r^(n-1); the mode term
    k^2 / r^2 is lumped with the node masses. Row sums vanish on interior
    rows of the k = 0 operator, which encodes the zero-flux origin.
    """
    lo, hi = active_range(grid, mode)
    nodes = grid.nodes
    n, dr = grid.n, grid.dr
    # face conductance at j+1/2: exact cell mean of r^(n-1), over dr
    cond = (nodes[1:] ** n - nodes[:-1] ** n) / (n * dr * dr)
    ma = hi - lo
    diag = np.zeros(ma)
    lower = np.zeros(ma)
    upper = np.zeros(ma)
    for i in range(ma):
        j = lo + i
        g_left = cond[j - 1] if j > 0 else 0.0
        diag[i] = g_left + cond[j]
        if i > 0:
            lower[i] = -g_left
        if i < ma - 1:
            upper[i] = -cond[j]
    if mode > 0:
        rj = nodes[lo:hi]
        diag += mode ** 2 * grid.weights[lo:hi] / rj ** 2
    return lower, diag, upper


def scheme_bands(grid: RadialGrid, tgrid: TimeGrid, mode: int):
    """Bands of A = W + dt*theta*K and B = W - dt*(1-theta)*K."""
    lo, hi = active_range(grid, mode)
    kl, kd, ku = operator_bands(grid, mode)
    w = grid.weights[lo:hi]
    dt, theta = tgrid.dt, tgrid.theta
    a = (dt * theta * kl, w + dt * theta * kd, dt * theta * ku)
    b = (-dt * (1.0 - theta) * kl, w - dt * (1.0 - theta) * kd,
         -dt * (1.0 - theta) * ku)
    return a, b


def march(grid: RadialGrid, tgrid: TimeGrid, mode: int,
          initial_active: np.ndarray, loads_active) -> np.ndarray:
    """Run the theta march on active nodes; returns (N+1, M+1) padded values."""
    lo, hi = active_range(grid, mode)
    (al, ad, au), (bl, bd, bu) = scheme_bands(grid, tgrid, mode)
    hist = theta_march(al, ad, au, bl, bd, bu, initial_active, loads_active,
                       tgrid.N)
    values = np.zeros((tgrid.N + 1, grid.M + 1))
    values[:, lo:hi] = hist
    return values


def _profile(grid: RadialGrid, data, name: str) -> np.ndarray:
    if data is None:
        return np.zeros(grid.M + 1)
    arr = np.asarray(data.values if isinstance(data, RadialField) else data,
                     dtype=float)
    if arr.shape != (grid.M + 1,):
        raise ValueError(f"{name} must have shape ({grid.M + 1},)")
    return arr


def _source_table(problem: ModalProblem) -> np.ndarray:
    """Source as an (N+1, M+1) table (a single row if time-independent)."""
    grid, tgrid = problem.grid, problem.tgrid
    src = problem.source
    if src is None:
        return np.zeros((1, grid.M + 1))
    if isinstance(src, SpaceTimeField):
        src = src.values
    elif isinstance(src, RadialField):
        src = src.values
    arr = np.asarray(src, dtype=float)
    if arr.ndim == 1:
        if arr.shape != (grid.M + 1,):
            raise ValueError("radial source must have M+1 values")
        return arr[None, :]
    if arr.shape != (tgrid.N + 1, grid.M + 1):
        raise ValueError("space-time source must have shape (N+1, M+1)")
    return arr


def _loads(problem: ModalProblem, reverse: bool = False) -> np.ndarray:
    """Per-step loads dt * (w * theta-averaged source + ring load)."""
    grid, tgrid = problem.grid, problem.tgrid
    lo, hi = active_range(grid, problem.mode)
    w = grid.weights[lo:hi]
    dt, theta = tgrid.dt, tgrid.theta
    table = _source_table(problem)[:, lo:hi]
    if reverse:
        table = table[::-1]
    if table.shape[0] == 1:
        avg = table
    else:
        avg = theta * table[1:] + (1.0 - theta) * table[:-1]
    loads = dt * (w[None, :] * avg)
    if problem.jump_strength != 0.0:
        j = grid.j_star - lo
        ring = np.zeros(hi - lo)
        ring[j] = grid.r_star ** (grid.n - 1) * problem.jump_strength
        loads = loads + dt * ring[None, :]
    return loads


def solve_forward(problem: ModalProblem) -> SpaceTimeField:
    """March the modal heat equation forward from problem.initial."""
    grid = problem.grid
    lo, hi = active_range(grid, problem.mode)
    u0 = _profile(grid, problem.initial, "initial")[lo:hi]
    values = march(grid, problem.tgrid, problem.mode, u0, _loads(problem))
    return SpaceTimeField(grid, problem.tgrid, problem.mode, values)


def solve_backward(problem: ModalProblem) -> SpaceTimeField:
    """Solve the terminal-value problem -dp/dt = Lp + source, p(T) = terminal.

    Implemented as the time-reversed forward march with the same scheme
    matrices, so it is the exact transpose of the one-step forward map and
    running it on reversed forward output reproduces the input exactly.
    """
    grid = problem.grid
    lo, hi = active_range(grid, problem.mode)
    pT = _profile(grid, problem.terminal, "terminal")[lo:hi]
    values = march(grid, problem.tgrid, problem.mode, pT,
                   _loads(problem, reverse=True))
    return SpaceTimeField(grid, problem.tgrid, problem.mode, values[::-1])


def solve_jump_forward(grid: RadialGrid, tgrid: TimeGrid, mode: int,
                       jump_strength: float = 1.0) -> SpaceTimeField:
    """Response of mode k >= 1 to a steady ring source on the interface.

    Starts from zero, no volume source; the radial derivative drops by
    jump_strength across r_star once the transient settles.
    """
    if mode < 1:
        raise ValueError("jump responses are defined for modes k >= 1")
    problem = ModalProblem(grid=grid, tgrid=tgrid, mode=mode,
                           jump_strength=jump_strength)
    return solve_forward(problem)


def normal_derivative_at(f, r: float, side: str = "centered",
                         t_index: int | None = None,
                         grid: RadialGrid | None = None) -> float:
    """Second-order radial derivative estimate at a grid node.

    f may be a SpaceTimeField (pass t_index), a RadialField, or a plain
    nodal array (pass grid). side selects the stencil: 'inner' uses nodes
    at and below r, 'outer' nodes at and above, 'centered' the symmetric
    three-point formula. Exact for quadratics.
    """
    if isinstance(f, SpaceTimeField):
        if t_index is None:
            raise ValueError("t_index is required for space-time fields")
        grid = f.grid
        v = f.values[t_index]
    elif isinstance(f, RadialField):
        grid = f.grid
        v = f.values
    else:
        if grid is None:
            raise ValueError("grid is required for raw arrays")
        v = np.asarray(f, dtype=float)
    dr = grid.dr
    j = int(round(r / dr))
    if not np.isclose(grid.nodes[j], r, atol=dr * 1e-9):
        raise ValueError("r must coincide with a grid node")
    if side == "centered":
        if not 1 <= j <= grid.M - 1:
            raise ValueError("centered stencil needs an interior node")
        return float((v[j + 1] - v[j - 1]) / (2.0 * dr))
    if side == "inner":
        if j < 2:
            raise ValueError("inner stencil needs j >= 2")
        return float((3.0 * v[j] - 4.0 * v[j - 1] + v[j - 2]) / (2.0 * dr))
    if side == "outer":
        if j > grid.M - 2:
            raise ValueError("outer stencil needs j <= M-2")
        return float((-3.0 * v[j] + 4.0 * v[j + 1] - v[j + 2]) / (2.0 * dr))
    raise ValueError("side must be 'inner', 'outer', or 'centered'")


def time_integral(f: SpaceTimeField, node: int | None = None):
    """Trapezoid-in-time integral of a space-time field.

    Returns a RadialField of per-node integrals, or a scalar when a node
    index is given.
    """
    dt = f.tgrid.dt
    v = f.values if node is None else f.values[:, node]
    acc = dt * (v.sum(axis=0) - 0.5 * (v[0] + v[-1]))
    if node is None:
        return RadialField(f.grid, acc)
    return float(acc)
