"""Admissible source profiles on the disk and the competitor families.

Controls take values in [0, 1] and carry a fixed total mass V0 per time
slice. The reference profile is the indicator of the centered ball of
radius r_star, represented on the grid through exact hat-function
coverage fractions, so its mass is V0 to machine precision. Competitor
families (annuli, shifted balls, boundary-deformed balls, oscillating
annuli) are built the same way, ray by ray where the set is not radial.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .geometry import RadialGrid, _power_moment, l1_distance

__all__ = [
    "AdmissibleSpec",
    "AnnulusRadii",
    "Channel",
    "Control",
    "default_spec",
    "interval_coverage",
    "reference_control",
    "bathtub_maximizer",
    "annulus_radii",
    "annulus_control",
    "shifted_ball_control",
    "deformed_ball_control",
    "oscillating_annulus_control",
    "sample_random_admissible",
    "sample_bangbang_at_distance",
    "project_admissible",
    "lens_area",
    "control_to_json",
    "control_from_json",
]

MAX_MODES = 16
DEFAULT_ANGULAR_SAMPLES = 1024
MASS_RTOL = 1e-10


@dataclass(frozen=True)
class AdmissibleSpec:
    """Mass budget for the control class: 0 <= f <= 1, integral = v0."""

    v0: float

    def validate(self, grid: RadialGrid) -> None:
        if not (0.0 < self.v0 < grid.domain_volume):
            raise ValueError("v0 must lie strictly between 0 and Vol(Omega)")


def default_spec(grid: RadialGrid) -> AdmissibleSpec:
    """Mass of the centered ball of radius r_star (pi/4 for the defaults)."""
    return AdmissibleSpec(v0=grid.unit_ball_volume * grid.r_star**grid.n)


@dataclass(frozen=True)
class AnnulusRadii:
    """Inner retreat and outer advance of the equal-mass annulus family."""

    r_minus: float
    r_plus: float
    delta: float


@dataclass(frozen=True)
class Channel:
    """One angular Fourier channel of a control: mode k, cos or sin."""

    mode: int
    trig: str
    values: np.ndarray = field(repr=False)


def _cumulative_hat(grid: RadialGrid, x) -> np.ndarray:
    """Per-node integral of hat_j over [0, x] against r^(n-1) dr.

    x broadcasts over leading axes; the result gains a trailing axis of
    length M+1. Summed against sphere_measure this is the exact measure
    of [0, x], since the hats partition unity.
    """
    nodes = grid.nodes
    dr = grid.dr
    n = grid.n
    left = nodes[:-1]
    right = nodes[1:]
    x = np.asarray(x, dtype=float)[..., None]
    s = np.clip(x, left, right)
    out = np.zeros(x.shape[:-1] + (grid.M + 1,))
    out[..., 1:] += _power_moment(left, s, n, -left / dr, 1.0 / dr)
    out[..., :-1] += _power_moment(left, s, n, right / dr, -1.0 / dr)
    return out


def interval_coverage(grid: RadialGrid, intervals) -> np.ndarray:
    """Exact hat-coverage fractions of a union of radial intervals.

    intervals is a sequence of (a, b) pairs; endpoints may be arrays that
    broadcast over leading axes (one interval per ray). The weighted sum
    of the result recovers the measure of the union exactly, and values
    lie in [0, 1].
    """
    total = 0.0
    for a, b in intervals:
        a = np.clip(np.asarray(a, dtype=float), 0.0, grid.R)
        b = np.clip(np.asarray(b, dtype=float), 0.0, grid.R)
        b = np.maximum(a, b)
        total = total + (_cumulative_hat(grid, b) - _cumulative_hat(grid, a))
    return np.clip(total / grid.weights, 0.0, 1.0)


def _angles(n_ang: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_ang) / n_ang


@dataclass(frozen=True)
class Control:
    """A sampled admissible control.

    kind is one of radial, time_radial, polar, ball, annulus,
    deformed_ball, oscillating_annulus. Grid kinds carry their sampled
    values; parametric kinds carry parameters and sample on demand.
    """

    grid: RadialGrid
    spec: AdmissibleSpec
    kind: str
    params: dict
    values: np.ndarray | None = field(default=None, repr=False)
    degenerate: bool = False
    angular_samples: int = DEFAULT_ANGULAR_SAMPLES

    def __post_init__(self):
        if self.values is not None:
            v = np.asarray(self.values, dtype=float)
            if v.min() < -1e-12 or v.max() > 1.0 + 1e-12:
                raise ValueError("control values must lie in [0, 1]")
            object.__setattr__(self, "values", v)

    # -- sampling ---------------------------------------------------------

    def _ray_intervals(self):
        """Per-ray radial intervals for the parametric kinds."""
        g = self.grid
        theta = _angles(self.angular_samples)
        if self.kind == "ball":
            d = float(self.params["shift"])
            rho = float(self.params["radius"])
            c = np.cos(theta)
            disc = rho**2 - (d * np.sin(theta)) ** 2
            # origin is interior (d < rho), so each ray sees [0, t_plus]
            t_plus = d * c + np.sqrt(np.maximum(disc, 0.0))
            return [(np.zeros_like(t_plus), t_plus)]
        if self.kind == "deformed_ball":
            tau = float(self.params["tau"])
            off = float(self.params["offset"])
            radius = np.full_like(theta, self.grid.r_star + off)
            for k, a in enumerate(self.params["alphas"], start=1):
                radius = radius + tau * a * np.cos(k * theta)
            for k, b in enumerate(self.params["betas"], start=1):
                radius = radius + tau * b * np.sin(k * theta)
            if radius.min() <= 0.0 or radius.max() >= g.R:
                raise ValueError("deformed boundary exits the domain")
            return [(np.zeros_like(radius), radius)]
        raise ValueError(f"kind {self.kind} has no ray representation")

    def coverage(self) -> np.ndarray:
        """Sampled values: (M+1,), (N+1, M+1), or (L, M+1) for ray kinds."""
        if self.values is not None:
            return self.values
        if self.kind == "annulus":
            g = self.grid
            rm, rp = self.params["r_minus"], self.params["r_plus"]
            return interval_coverage(
                g, [(0.0, g.r_star - rm), (g.r_star, g.r_star + rp)])
        return interval_coverage(self.grid, self._ray_intervals())

    def radial_mean(self) -> np.ndarray:
        """Angular mean profile, shape (M+1,) or (N+1, M+1)."""
        cov = self.coverage()
        if self.kind in ("ball", "deformed_ball", "polar"):
            return cov.mean(axis=0)
        return cov

    def channels(self, n_modes: int = MAX_MODES) -> list[Channel]:
        """Real angular Fourier channels a_0, a_k cos, b_k sin (k <= n_modes).

        Radial and time-radial controls have only the mean channel. For
        ray-sampled kinds the channels come from equispaced quadrature in
        theta; channels with negligible norm are dropped.
        """
        if self.kind in ("radial", "time_radial", "annulus",
                         "oscillating_annulus"):
            return [Channel(0, "cos", self.radial_mean())]
        cov = self.coverage()
        L = cov.shape[0]
        theta = _angles(L)
        out = [Channel(0, "cos", cov.mean(axis=0))]
        scale = max(float(np.abs(cov).max()), 1e-300)
        for k in range(1, n_modes + 1):
            ak = (2.0 / L) * np.cos(k * theta) @ cov
            bk = (2.0 / L) * np.sin(k * theta) @ cov
            if np.abs(ak).max() > 1e-13 * scale:
                out.append(Channel(k, "cos", ak))
            if np.abs(bk).max() > 1e-13 * scale:
                out.append(Channel(k, "sin", bk))
        return out

    def channel_tail_mass(self, n_modes: int = MAX_MODES) -> float:
        """Squared-norm mass beyond the retained modes (quadrature check)."""
        if self.kind in ("radial", "time_radial", "annulus",
                         "oscillating_annulus"):
            return 0.0
        cov = self.coverage()
        L = cov.shape[0]
        theta = _angles(L)
        full = 2.0 * np.pi / L * np.sum(cov * cov, axis=0)
        a0 = cov.mean(axis=0)
        kept = 2.0 * np.pi * a0 * a0
        for k in range(1, n_modes + 1):
            ak = (2.0 / L) * np.cos(k * theta) @ cov
            bk = (2.0 / L) * np.sin(k * theta) @ cov
            kept = kept + np.pi * (ak * ak + bk * bk)
        return float(np.dot(self.grid.weights, np.maximum(full - kept, 0.0)))

    # -- bookkeeping ------------------------------------------------------

    def per_slice_mass(self):
        """Weighted mass of each time slice (scalar for static controls)."""
        mean = self.radial_mean()
        masses = self.grid.node_masses()
        if mean.ndim == 1:
            return float(np.dot(masses, mean))
        return mean @ masses

    def l1_to_reference(self):
        """L1 distance to the reference ball.

        Parametric kinds use the geometric symmetric difference (the grid
        metric collapses for sub-cell perturbations); grid kinds use the
        grid metric. Time-dependent controls return one value per slice.
        """
        g = self.grid
        if self.kind == "annulus":
            return float(self.params["delta"])
        if self.params.get("family") == "bangbang-at-distance":
            # geometric value: rings adjacent across the interface share
            # hat cells, so the grid metric undercounts them
            return float(self.params["delta"])
        if self.kind == "oscillating_annulus":
            return np.asarray(self.params["deltas"], dtype=float)
        if self.kind == "ball":
            d = float(self.params["shift"])
            rho = float(self.params["radius"])
            return 2.0 * (np.pi * rho**2 - lens_area(d, rho))
        if self.kind == "deformed_ball":
            # area of the symmetric difference of the star domain and B*
            theta = _angles(8 * self.angular_samples)
            tau = float(self.params["tau"])
            radius = np.full_like(theta, g.r_star + float(self.params["offset"]))
            for k, a in enumerate(self.params["alphas"], start=1):
                radius = radius + tau * a * np.cos(k * theta)
            for k, b in enumerate(self.params["betas"], start=1):
                radius = radius + tau * b * np.sin(k * theta)
            return float(np.mean(np.pi * np.abs(radius**2 - g.r_star**2)))
        ref = reference_control(g, self.spec).values
        vals = self.radial_mean()
        if vals.ndim == 1:
            return l1_distance(vals, ref, g)
        return np.array([l1_distance(v, ref, g) for v in vals])


def reference_control(grid: RadialGrid,
                      spec: AdmissibleSpec | None = None) -> Control:
    """Indicator of the centered ball of radius r_star (hat fractions)."""
    spec = default_spec(grid) if spec is None else spec
    vals = interval_coverage(grid, [(0.0, grid.r_star)])
    return Control(grid=grid, spec=spec, kind="radial", params={}, values=vals)


def bathtub_maximizer(psi, grid: RadialGrid, spec: AdmissibleSpec) -> Control:
    """Fill the superlevel sets of psi down to the mass budget.

    Cells are filled in decreasing psi order (ties in input-index order);
    the last cell gets a fractional value so the mass is exactly v0. When
    the threshold plateau has more room than the remaining mass and
    several cells, any fill is optimal and the result is flagged
    degenerate.
    """
    spec.validate(grid)
    v = np.asarray(psi.values if hasattr(psi, "values") else psi, dtype=float)
    polar = v.ndim == 2
    masses = grid.node_masses()
    if polar:
        masses = np.broadcast_to(masses / v.shape[0], v.shape).ravel()
        flat = v.ravel()
    else:
        if v.shape != (grid.M + 1,):
            raise ValueError("psi must be radial or a polar stack")
        flat = v
    if not np.all(np.isfinite(flat)):
        raise ValueError("psi must be finite")
    order = np.argsort(-flat, kind="stable")
    cs = np.cumsum(masses[order])
    idx = int(np.searchsorted(cs, spec.v0, side="left"))
    fill = np.zeros(flat.shape)
    fill[order[:idx]] = 1.0
    rem = spec.v0 - (cs[idx - 1] if idx > 0 else 0.0)
    degenerate = False
    if rem > 0.0:
        fill[order[idx]] = rem / masses[order[idx]]
        c = flat[order[idx]]
        plateau = flat == c
        capacity = float(np.sum(masses[plateau]))
        used = float(np.sum(masses[plateau] * fill[plateau]))
        if np.count_nonzero(plateau) > 1 and capacity > used + 1e-15:
            degenerate = True
    out = fill.reshape(v.shape)
    return Control(grid=grid, spec=spec, kind="polar" if polar else "radial",
                   params={}, values=out, degenerate=degenerate)


def annulus_radii(delta: float, grid: RadialGrid,
                  spec: AdmissibleSpec) -> AnnulusRadii:
    """Solve the two equal-area equations of the annulus family.

    The inner boundary retreats and the outer advances so that each side
    carries mass delta/2; both roots are explicit n-th roots.
    """
    spec.validate(grid)
    omega = grid.unit_ball_volume
    rs, n = grid.r_star, grid.n
    vol_out = grid.domain_volume - spec.v0
    delta_max = 2.0 * min(spec.v0, vol_out)
    if delta < 0.0 or delta > delta_max:
        raise ValueError(f"delta must lie in [0, {delta_max}]")
    half = delta / 2.0
    r_minus = rs - (rs**n - half / omega) ** (1.0 / n)
    r_plus = (rs**n + half / omega) ** (1.0 / n) - rs
    if rs + r_plus >= grid.R:
        raise ValueError("annulus outer boundary reaches the domain wall")
    return AnnulusRadii(r_minus=float(r_minus), r_plus=float(r_plus),
                        delta=float(delta))


def annulus_control(delta: float, grid: RadialGrid,
                    spec: AdmissibleSpec | None = None) -> Control:
    spec = default_spec(grid) if spec is None else spec
    rad = annulus_radii(delta, grid, spec)
    return Control(grid=grid, spec=spec, kind="annulus",
                   params={"delta": rad.delta, "r_minus": rad.r_minus,
                           "r_plus": rad.r_plus})


def shifted_ball_control(shift: float, grid: RadialGrid,
                         spec: AdmissibleSpec | None = None,
                         n_ang: int = DEFAULT_ANGULAR_SAMPLES) -> Control:
    """Ball of radius r_star centered at distance shift from the origin.

    The shift is limited to shift < r_star (origin interior), which keeps
    every ray crossing smooth and the angular quadrature spectrally exact;
    the sweep shifts are far below that. The set must stay inside Omega.
    """
    spec = default_spec(grid) if spec is None else spec
    d = abs(float(shift))
    if d + grid.r_star >= grid.R:
        raise ValueError("shifted ball exits the domain")
    if d >= grid.r_star:
        raise ValueError("shift must stay below r_star")
    return Control(grid=grid, spec=spec, kind="ball",
                   params={"shift": d, "radius": grid.r_star},
                   angular_samples=n_ang)


def deformed_ball_control(tau: float, alphas, betas, grid: RadialGrid,
                          spec: AdmissibleSpec | None = None,
                          volume_corrected: bool = True,
                          n_ang: int = DEFAULT_ANGULAR_SAMPLES) -> Control:
    """Star-shaped set with boundary r* + tau * trig polynomial.

    With volume correction a uniform radial offset (order tau^2, recorded
    in params) restores the mass to exactly v0; the angular quadrature is
    exact because the squared boundary radius is a trig polynomial of
    degree below the sample count.
    """
    spec = default_spec(grid) if spec is None else spec
    alphas = [float(a) for a in np.atleast_1d(alphas)]
    betas = [float(b) for b in np.atleast_1d(betas)]
    if 2 * max(len(alphas), len(betas)) >= n_ang:
        raise ValueError("angular sampling too coarse for the mode content")
    offset = 0.0
    if volume_corrected:
        power = 0.5 * (np.sum(np.square(alphas)) + np.sum(np.square(betas)))
        shrunk = grid.r_star**2 - tau**2 * power
        if shrunk <= 0.0:
            raise ValueError("deformation too large to correct the volume")
        offset = float(np.sqrt(shrunk) - grid.r_star)
    theta = _angles(n_ang)
    radius = np.full_like(theta, grid.r_star + offset)
    for k, a in enumerate(alphas, start=1):
        radius = radius + tau * a * np.cos(k * theta)
    for k, b in enumerate(betas, start=1):
        radius = radius + tau * b * np.sin(k * theta)
    if radius.min() <= 0.0 or radius.max() >= grid.R:
        raise ValueError("deformed boundary exits the domain")
    return Control(grid=grid, spec=spec, kind="deformed_ball",
                   params={"tau": float(tau), "alphas": alphas,
                           "betas": betas, "offset": offset},
                   angular_samples=n_ang)


def oscillating_annulus_control(delta0: float, n_osc: int, grid: RadialGrid,
                                tgrid, spec: AdmissibleSpec | None = None
                                ) -> Control:
    """Annulus whose asymmetry pulses as delta0 |sin(pi m t / T)|."""
    spec = default_spec(grid) if spec is None else spec
    deltas = delta0 * np.abs(np.sin(np.pi * n_osc * tgrid.times / tgrid.T))
    rows = []
    for d in deltas:
        rad = annulus_radii(float(d), grid, spec)
        rows.append(interval_coverage(
            grid, [(0.0, grid.r_star - rad.r_minus),
                   (grid.r_star, grid.r_star + rad.r_plus)]))
    return Control(grid=grid, spec=spec, kind="oscillating_annulus",
                   params={"delta0": float(delta0), "n_osc": int(n_osc),
                           "deltas": [float(d) for d in deltas]},
                   values=np.array(rows))


def _threshold_shift(v: np.ndarray, masses: np.ndarray, v0: float) -> np.ndarray:
    """Shift-then-clip projection onto {0 <= f <= 1, mass = v0}."""
    def mass_at(c):
        return float(np.dot(masses, np.clip(v - c, 0.0, 1.0))) - v0

    lo = float(v.min()) - 1.0
    hi = float(v.max())
    c = brentq(mass_at, lo, hi, xtol=1e-15, rtol=8.9e-16)
    return np.clip(v - c, 0.0, 1.0)


def project_admissible(f, grid: RadialGrid,
                       spec: AdmissibleSpec | None = None) -> Control:
    """Clip to [0,1], then shift mass back to v0 by a uniform threshold.

    Fields that are already admissible pass through unchanged.
    """
    spec = default_spec(grid) if spec is None else spec
    v = np.asarray(f.values if hasattr(f, "values") else f, dtype=float)
    if v.shape != (grid.M + 1,):
        raise ValueError("expected a radial field")
    masses = grid.node_masses()
    clipped = np.clip(v, 0.0, 1.0)
    if abs(float(np.dot(masses, clipped)) - spec.v0) <= 1e-12 * grid.domain_volume:
        return Control(grid=grid, spec=spec, kind="radial", params={},
                       values=clipped)
    out = _threshold_shift(v, masses, spec.v0)
    return Control(grid=grid, spec=spec, kind="radial", params={}, values=out)


def sample_random_admissible(seed: int, kind: str, grid: RadialGrid,
                             spec: AdmissibleSpec | None = None,
                             tgrid=None, **kw) -> Control:
    """Random admissible control of the requested kind.

    kinds: bangbang-radial (0/1 cells, one fractional), smooth (random
    bumps projected onto the class), time-oscillating-annulus (random
    pulse amplitude and count unless given as delta0=, n_osc=).
    """
    spec = default_spec(grid) if spec is None else spec
    rng = np.random.default_rng(seed)
    if kind == "bangbang-radial":
        masses = grid.node_masses()
        order = rng.permutation(grid.M + 1)
        vals = np.zeros(grid.M + 1)
        acc = 0.0
        for j in order:
            if acc + masses[j] < spec.v0:
                vals[j] = 1.0
                acc += masses[j]
            else:
                vals[j] = (spec.v0 - acc) / masses[j]
                break
        return Control(grid=grid, spec=spec, kind="radial",
                       params={"seed": seed, "family": kind}, values=vals)
    if kind == "smooth":
        r = grid.nodes
        v = np.zeros_like(r)
        for _ in range(4):
            amp = rng.uniform(0.3, 1.5)
            center = rng.uniform(0.0, grid.R)
            width = rng.uniform(0.1, 0.35) * grid.R
            v += amp * np.exp(-((r - center) / width) ** 2)
        out = project_admissible(v, grid, spec)
        return Control(grid=grid, spec=spec, kind="radial",
                       params={"seed": seed, "family": kind},
                       values=out.values)
    if kind == "time-oscillating-annulus":
        if tgrid is None:
            raise ValueError("time-oscillating-annulus needs a time grid")
        delta_cap = 2.0 * min(spec.v0, grid.domain_volume - spec.v0)
        delta0 = kw.get("delta0", rng.uniform(0.05, 0.4) * delta_cap)
        n_osc = kw.get("n_osc", int(rng.integers(1, 5)))
        return oscillating_annulus_control(delta0, n_osc, grid, tgrid, spec)
    raise ValueError(f"unknown sampler kind: {kind}")


def sample_bangbang_at_distance(seed: int, delta: float, grid: RadialGrid,
                                spec: AdmissibleSpec | None = None,
                                local: bool = True) -> Control:
    """Random set at symmetric-difference distance exactly delta from
    the ball.

    Radial rings with total measure delta/2 are carved out of the ball
    and the same measure is added outside; the rings are placed in the
    mass coordinate with random piece counts, sizes, and gaps, and
    sampled with exact hat coverage (sub-cell widths are fine). With
    local=True placement happens in a band of 4x the needed capacity
    around the interface, so the construction rescales with delta and
    the deficit-to-distance ratio stays on one scale as delta sweeps;
    with local=False the rings land anywhere on their side.
    """
    spec = default_spec(grid) if spec is None else spec
    rng = np.random.default_rng(seed)
    half = delta / 2.0
    if half <= 0.0:
        raise ValueError("delta must be positive")
    sph, n, rs = grid.sphere_measure, grid.n, grid.r_star
    cap_in = sph / n * rs**n
    cap_out = sph / n * (grid.R**n - rs**n)
    if half > min(cap_in, cap_out):
        raise ValueError("distance exceeds what the class can move")

    def carve(capacity, inward):
        # piece masses and gaps laid out in the mass coordinate, walking
        # away from the interface; hat coverage keeps sub-cell pieces exact
        band = min(4.0 * half, capacity) if local else capacity
        k = int(rng.integers(1, 4))
        masses = rng.dirichlet(np.ones(k)) * half
        gaps = rng.dirichlet(np.ones(k + 1)) * (band - half)
        sign = -1.0 if inward else 1.0
        pieces = []
        s = 0.0
        for m, gap in zip(masses, gaps):
            s += gap
            r_near = (rs**n + sign * n * s / sph) ** (1.0 / n)
            r_far = (rs**n + sign * n * (s + m) / sph) ** (1.0 / n)
            pieces.append((min(r_near, r_far), max(r_near, r_far)))
            s += m
        return sorted(pieces)

    removed = carve(cap_in, inward=True)
    added = carve(cap_out, inward=False)
    kept = []
    edge = 0.0
    for a, b in removed:
        kept.append((edge, a))
        edge = b
    kept.append((edge, rs))
    vals = interval_coverage(grid, kept + added)
    return Control(grid=grid, spec=spec, kind="radial",
                   params={"seed": seed, "family": "bangbang-at-distance",
                           "delta": float(delta), "local": bool(local),
                           "removed": [list(p) for p in removed],
                           "added": [list(p) for p in added]},
                   values=vals)


def lens_area(d: float, rho: float) -> float:
    """Overlap area of two discs of radius rho at center distance d."""
    if d >= 2.0 * rho:
        return 0.0
    if d <= 0.0:
        return np.pi * rho**2
    return (2.0 * rho**2 * np.arccos(d / (2.0 * rho))
            - 0.5 * d * np.sqrt(4.0 * rho**2 - d**2))


def control_to_json(control: Control) -> str:
    """Serialize a control: tag, parameters, grid fingerprint, masses.

    Grid-sampled kinds embed their values; parametric kinds resample
    deterministically on load.
    """
    doc = {
        "kind": control.kind,
        "params": control.params,
        "v0": control.spec.v0,
        "degenerate": control.degenerate,
        "angular_samples": control.angular_samples,
        "grid": {"R": control.grid.R, "M": control.grid.M,
                 "n": control.grid.n, "j_star": control.grid.j_star},
        "per_slice_mass": np.atleast_1d(control.per_slice_mass()).tolist(),
    }
    if control.values is not None:
        doc["values"] = np.asarray(control.values).tolist()
    return json.dumps(doc, sort_keys=True)


def control_from_json(text: str, grid: RadialGrid) -> Control:
    doc = json.loads(text)
    fp = doc["grid"]
    if (fp["R"], fp["M"], fp["n"], fp["j_star"]) != (
            grid.R, grid.M, grid.n, grid.j_star):
        raise ValueError("grid fingerprint mismatch")
    values = np.array(doc["values"]) if "values" in doc else None
    return Control(grid=grid, spec=AdmissibleSpec(v0=doc["v0"]),
                   kind=doc["kind"], params=doc["params"], values=values,
                   degenerate=doc["degenerate"],
                   angular_samples=doc["angular_samples"])
