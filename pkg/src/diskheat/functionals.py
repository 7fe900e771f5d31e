"""Objectives, adjoint switches, and deficit reports.

The running cost is half the space-time square integral of the state,
optionally plus a terminal term (epsilon/2) * integral of u(T)^2. States
are solved per angular Fourier channel and recombined with the Parseval
factors 2*pi (mean channel) and pi (each cos/sin channel).

The adjoint is the exact algebraic transpose of the marching scheme, so
the duality pairing below reproduces directional derivatives of the
discrete objective to roundoff, not just to discretization order. Its
rows sit at staggered times (midpoints for the trapezoidal cost), and the
row at index N carries the terminal profile epsilon * u(T).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .controls import Channel, Control, default_spec, reference_control
from .geometry import RadialGrid, RadialField, TimeGrid
from .radial_pde import (
    ModalProblem,
    SpaceTimeField,
    active_range,
    march,
    normal_derivative_at,
    solve_forward,
)

__all__ = [
    "ProblemSetup",
    "AdjointSwitch",
    "DeficitReport",
    "default_setup",
    "initial_condition",
    "evaluate_jt",
    "evaluate_jt_eps",
    "adjoint_switch",
    "gateaux",
    "quadratic_expansion_check",
    "deficit_ti",
    "deficit_td",
    "switch_weight_profile",
]

MASS_FREE_TOL = 1e-8


@dataclass(frozen=True)
class ProblemSetup:
    """Grid, horizon, mass budget, terminal weight, initial condition."""

    grid: RadialGrid
    tgrid: TimeGrid
    spec: object
    epsilon: float = 0.1
    u0: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")
        if self.u0 is not None:
            v = np.asarray(self.u0, dtype=float)
            if v.shape != (self.grid.M + 1,):
                raise ValueError("u0 must be a radial profile")
            scale = max(float(np.abs(v).max()), 1.0)
            if v.min() < -1e-14 * scale:
                raise ValueError("u0 must be nonnegative")
            if np.any(np.diff(v) > 1e-14 * scale):
                raise ValueError("u0 must be radially nonincreasing")
            if abs(v[-1]) > 1e-14 * scale:
                raise ValueError("u0 must vanish on the boundary")
            object.__setattr__(self, "u0", v)

    def canonical(self) -> dict:
        g, t = self.grid, self.tgrid
        doc = {"R": g.R, "M": g.M, "n": g.n, "j_star": g.j_star,
               "T": t.T, "N": t.N, "theta": t.theta,
               "epsilon": self.epsilon, "v0": self.spec.v0}
        if self.u0 is not None and np.any(self.u0):
            doc["u0"] = self.u0.tolist()
        return doc

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def default_setup(grid: RadialGrid, tgrid: TimeGrid,
                  epsilon: float = 0.1, u0=None,
                  spec=None) -> ProblemSetup:
    spec = default_spec(grid) if spec is None else spec
    return ProblemSetup(grid=grid, tgrid=tgrid, spec=spec,
                        epsilon=epsilon, u0=u0)


def initial_condition(amplitude: float, grid: RadialGrid) -> np.ndarray:
    """The built-in admissible initial family a * (1 - (r/R)^2)."""
    if amplitude < 0.0:
        raise ValueError("amplitude must be nonnegative")
    return amplitude * (1.0 - (grid.nodes / grid.R) ** 2)


def _check_control(f: Control, setup: ProblemSetup) -> None:
    g, h = f.grid, setup.grid
    if (g.R, g.M, g.n, g.j_star) != (h.R, h.M, h.n, h.j_star):
        raise ValueError("control sampled on a different grid")


def _channel_weight(mode: int, grid: RadialGrid) -> float:
    """Parseval factor of one angular channel."""
    if mode == 0:
        return grid.sphere_measure
    if grid.n != 2:
        raise ValueError("angular channels are defined for n = 2")
    return np.pi


def _time_weights(tgrid: TimeGrid) -> np.ndarray:
    c = np.full(tgrid.N + 1, tgrid.dt)
    c[0] *= 0.5
    c[-1] *= 0.5
    return c


def _as_channels(h, setup: ProblemSetup) -> list[Channel]:
    if isinstance(h, Control):
        _check_control(h, setup)
        return h.channels()
    if isinstance(h, (list, tuple)) and all(isinstance(c, Channel)
                                            for c in h):
        return list(h)
    v = np.asarray(h.values if isinstance(h, RadialField) else h, dtype=float)
    if v.shape == (setup.grid.M + 1,) or v.shape == (setup.tgrid.N + 1,
                                                     setup.grid.M + 1):
        return [Channel(0, "cos", v)]
    raise ValueError("direction must be radial or a space-time table")


def _solve_channel(ch: Channel, setup: ProblemSetup,
                   with_initial: bool) -> SpaceTimeField:
    initial = None
    if with_initial and ch.mode == 0 and ch.trig == "cos":
        initial = setup.u0
    return solve_forward(ModalProblem(grid=setup.grid, tgrid=setup.tgrid,
                                      mode=ch.mode, source=ch.values,
                                      initial=initial))


def _energy(state: SpaceTimeField, setup: ProblemSetup,
            with_terminal: bool) -> float:
    """Per-channel quadrature of u^2 (times 1/2, plus terminal term)."""
    w = setup.grid.weights
    c = _time_weights(setup.tgrid)
    u2 = state.values * state.values
    total = 0.5 * float(c @ (u2 @ w))
    if with_terminal and setup.epsilon > 0.0:
        total += 0.5 * setup.epsilon * float(u2[-1] @ w)
    return total


def _evaluate_channels(channels, setup: ProblemSetup, with_initial: bool,
                       with_terminal: bool) -> float:
    total = 0.0
    for ch in channels:
        state = _solve_channel(ch, setup, with_initial)
        total += _channel_weight(ch.mode, setup.grid) * _energy(
            state, setup, with_terminal)
    return total


def evaluate_jt(f: Control, setup: ProblemSetup) -> float:
    """Running cost (1/2) of the squared state over space and time."""
    return _evaluate_channels(_as_channels(f, setup), setup,
                              with_initial=True, with_terminal=False)


def evaluate_jt_eps(f: Control, setup: ProblemSetup) -> float:
    """Running cost plus the terminal term (epsilon/2) * int u(T)^2."""
    return _evaluate_channels(_as_channels(f, setup), setup,
                              with_initial=True, with_terminal=True)


@dataclass(frozen=True)
class AdjointSwitch:
    """Adjoint states and their time integrals, one entry per channel."""

    states: tuple
    integrals: tuple

    @property
    def p(self) -> SpaceTimeField:
        return self.states[0][2]

    @property
    def psi(self) -> RadialField:
        return self.integrals[0][2]

    def channel_state(self, mode: int, trig: str) -> SpaceTimeField | None:
        for m, t, s in self.states:
            if (m, t) == (mode, trig):
                return s
        return None

    def channel_integral(self, mode: int, trig: str) -> RadialField | None:
        for m, t, s in self.integrals:
            if (m, t) == (mode, trig):
                return s
        return None


def _transpose_adjoint(state: SpaceTimeField,
                       setup: ProblemSetup) -> SpaceTimeField:
    """Exact transpose of the march against the cost quadrature.

    Rows 0..N-1 are the duality multipliers (staggered midpoints at
    theta = 1/2); row N is filled with epsilon * u(T) for reporting.
    """
    grid, tgrid = setup.grid, setup.tgrid
    lo, hi = active_range(grid, state.mode)
    w = grid.weights[lo:hi]
    c = _time_weights(tgrid).copy()
    c[-1] += setup.epsilon
    u = state.values[:, lo:hi]
    # loads for the backward sweep, step s consumes row N-s of the state
    loads = (c[1:, None] * w[None, :] * u[1:])[::-1]
    hist = march(grid, tgrid, state.mode, np.zeros(hi - lo), loads)
    values = hist[::-1].copy()
    values[-1] = setup.epsilon * state.values[-1]
    return SpaceTimeField(grid, tgrid, state.mode, values)


def _psi_of(p: SpaceTimeField, setup: ProblemSetup) -> RadialField:
    vals = setup.tgrid.dt * p.values[:-1].sum(axis=0)
    return RadialField(setup.grid, vals)


def adjoint_switch(f: Control, setup: ProblemSetup) -> AdjointSwitch:
    """Solve the transpose system channel by channel.

    The pairing of a perturbation with these states is exactly the
    directional derivative of the discrete objective; for static
    directions the pairing reduces to the psi integrals.
    """
    states = []
    integrals = []
    for ch in _as_channels(f, setup):
        u = _solve_channel(ch, setup, with_initial=True)
        p = _transpose_adjoint(u, setup)
        states.append((ch.mode, ch.trig, p))
        integrals.append((ch.mode, ch.trig, _psi_of(p, setup)))
    return AdjointSwitch(states=tuple(states), integrals=tuple(integrals))


def _require_mass_free(channels, setup: ProblemSetup) -> None:
    masses = setup.grid.node_masses()
    for ch in channels:
        if ch.mode != 0:
            continue
        table = np.atleast_2d(ch.values)
        net = table @ masses
        scale = np.maximum(np.abs(table) @ masses, 1.0)
        if np.any(np.abs(net) > MASS_FREE_TOL * scale):
            raise ValueError("direction is not mass-free per slice")


def gateaux(f: Control, h, setup: ProblemSetup) -> float:
    """Duality pairing of a mass-free direction with the adjoint of f."""
    h_channels = _as_channels(h, setup)
    _require_mass_free(h_channels, setup)
    adj = adjoint_switch(f, setup)
    theta = setup.tgrid.theta
    dt = setup.tgrid.dt
    w = setup.grid.weights
    total = 0.0
    for ch in h_channels:
        p = adj.channel_state(ch.mode, ch.trig)
        if p is None:
            continue  # the state of f has no such channel: pairing is zero
        factor = _channel_weight(ch.mode, setup.grid)
        table = ch.values
        if table.ndim == 1:
            psi = adj.channel_integral(ch.mode, ch.trig).values
            total += factor * float(np.dot(w * table, psi))
        else:
            avg = theta * table[1:] + (1.0 - theta) * table[:-1]
            total += factor * dt * float(np.sum(avg * (w * p.values[:-1])))
    return total


def _merge_channels(a_channels, b_channels, setup: ProblemSetup):
    """Channelwise sum; mixed static/time tables broadcast in time."""
    out = {(c.mode, c.trig): np.asarray(c.values, dtype=float)
           for c in a_channels}
    rows = setup.tgrid.N + 1
    for c in b_channels:
        key = (c.mode, c.trig)
        v = np.asarray(c.values, dtype=float)
        if key in out:
            cur = out[key]
            if cur.ndim != v.ndim:
                cur = np.broadcast_to(cur, (rows, setup.grid.M + 1))
                v = np.broadcast_to(v, (rows, setup.grid.M + 1))
            out[key] = cur + v
        else:
            out[key] = v
    return [Channel(k[0], k[1], v) for k, v in sorted(out.items())]


def quadratic_expansion_check(f: Control, h, setup: ProblemSetup) -> float:
    """Residual of the exact second-order expansion of the objective.

    J(f+h) - J(f) - <h, p_f> - curvature(h) vanishes identically for the
    discrete quadratic objective; the returned absolute residual is pure
    roundoff. The curvature term is strictly positive for h != 0.
    """
    f_channels = _as_channels(f, setup)
    h_channels = _as_channels(h, setup)
    _require_mass_free(h_channels, setup)
    j_base = _evaluate_channels(f_channels, setup, True, True)
    j_moved = _evaluate_channels(_merge_channels(f_channels, h_channels,
                                                 setup), setup, True, True)
    slope = gateaux(f, h, setup)
    curvature = _evaluate_channels(h_channels, setup, with_initial=False,
                                   with_terminal=True)
    return abs(j_moved - j_base - slope - curvature)


# cached reference values and switch weights, keyed by the setup digest
_REFERENCE_CACHE: dict = {}


def _reference_value(setup: ProblemSetup, with_terminal: bool) -> float:
    key = (setup.digest(), with_terminal)
    if key not in _REFERENCE_CACHE:
        ref = reference_control(setup.grid, setup.spec)
        _REFERENCE_CACHE[key] = _evaluate_channels(
            _as_channels(ref, setup), setup, True, with_terminal)
    return _REFERENCE_CACHE[key]


def switch_weight_profile(setup: ProblemSetup) -> np.ndarray:
    """Interface slope -dp/dr(t, r*) of the reference adjoint, per row.

    Rows 0..N-1 sit at the staggered adjoint times; row N is the terminal
    profile epsilon * u(T). Positive entries make the time-dependent
    deficit weight nondegenerate.
    """
    key = (setup.digest(), "switch-weights")
    if key not in _REFERENCE_CACHE:
        ref = reference_control(setup.grid, setup.spec)
        adj = adjoint_switch(ref, setup)
        p = adj.p
        vals = np.array([
            -normal_derivative_at(p, setup.grid.r_star, side="centered",
                                  t_index=m)
            for m in range(setup.tgrid.N + 1)])
        _REFERENCE_CACHE[key] = vals
    return _REFERENCE_CACHE[key]


@dataclass(frozen=True)
class DeficitReport:
    """One competitor's deficit against the reference ball."""

    competitor_id: str
    family: str
    delta_or_params: str
    deficit: float
    l1_sq: float
    weight_min: float
    ratio: float

    CSV_HEADER = ("competitor_id,family,delta_or_params,"
                  "deficit,l1_sq,weight_min,ratio")

    def csv_row(self) -> str:
        nums = (self.deficit, self.l1_sq, self.weight_min, self.ratio)
        return ",".join([self.competitor_id, self.family,
                         self.delta_or_params]
                        + [format(x, ".17g") for x in nums])

    def json_record(self, setup: ProblemSetup) -> str:
        doc = {
            "competitor_id": self.competitor_id,
            "family": self.family,
            "delta_or_params": self.delta_or_params,
            "deficit": self.deficit,
            "l1_sq": self.l1_sq,
            "weight_min": self.weight_min,
            "ratio": self.ratio,
            "setup_digest": setup.digest(),
            "grid": {"M": setup.grid.M, "N": setup.tgrid.N,
                     "epsilon": setup.epsilon},
        }
        return json.dumps(doc, sort_keys=True)


def _describe(f: Control) -> tuple[str, str]:
    family = f.params.get("family", f.kind)
    p = f.params
    if f.kind == "annulus":
        detail = f"delta={p['delta']:.8g}"
    elif f.kind == "ball":
        detail = f"shift={p['shift']:.8g}"
    elif f.kind == "deformed_ball":
        detail = f"tau={p['tau']:.8g}"
    elif f.kind == "oscillating_annulus":
        detail = f"delta0={p['delta0']:.8g};m={p['n_osc']}"
    else:
        bits = [f"seed={p['seed']}"] if "seed" in p else []
        if "delta" in p:
            bits.append(f"delta={p['delta']:.8g}")
        detail = ";".join(bits) if bits else "custom"
    return str(family), detail


def _competitor_id(f: Control) -> str:
    from .controls import control_to_json
    return hashlib.sha256(control_to_json(f).encode()).hexdigest()[:10]


def deficit_ti(f: Control, setup: ProblemSetup) -> DeficitReport:
    """Deficit report against the squared distance, time-independent case.

    Requires the plain running cost (epsilon = 0) and a competitor at
    positive distance from the reference ball. Parametric families use
    their geometric symmetric difference; grid families the grid metric.
    """
    _check_control(f, setup)
    if setup.epsilon != 0.0:
        raise ValueError("time-independent reports use epsilon = 0")
    dist = f.l1_to_reference()
    if np.ndim(dist) != 0:
        raise ValueError("competitor must be time-independent")
    if dist <= 1e-10:
        raise ValueError("competitor coincides with the reference ball")
    deficit = _reference_value(setup, False) - evaluate_jt(f, setup)
    family, detail = _describe(f)
    l1_sq = float(dist) ** 2
    return DeficitReport(competitor_id=_competitor_id(f), family=family,
                         delta_or_params=detail, deficit=float(deficit),
                         l1_sq=l1_sq, weight_min=float("nan"),
                         ratio=float(deficit) / l1_sq)


def deficit_td(f: Control, setup: ProblemSetup) -> DeficitReport:
    """Deficit report with the adjoint-slope weight, time-dependent case.

    The distance functional integrates a_eps(t) * ||f(t) - f*||_1^2 with
    the staggered weight rows against trapezoidal slice distances.
    """
    _check_control(f, setup)
    if setup.epsilon <= 0.0:
        raise ValueError("time-dependent reports need epsilon > 0")
    weights = switch_weight_profile(setup)
    dist = np.atleast_1d(f.l1_to_reference()).astype(float)
    if dist.size == 1:
        dist = np.full(setup.tgrid.N + 1, dist[0])
    if float(dist.max()) <= 1e-10:
        raise ValueError("competitor coincides with the reference ball")
    d2 = dist * dist
    steps = 0.5 * (d2[:-1] + d2[1:])
    l1_sq = float(setup.tgrid.dt * np.dot(weights[:-1], steps))
    deficit = _reference_value(setup, True) - evaluate_jt_eps(f, setup)
    family, detail = _describe(f)
    return DeficitReport(competitor_id=_competitor_id(f), family=family,
                         delta_or_params=detail, deficit=float(deficit),
                         l1_sq=l1_sq, weight_min=float(weights.min()),
                         ratio=float(deficit) / l1_sq)
