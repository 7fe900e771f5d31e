"""Second-order shape calculus at the centered ball, disk case.

Normal perturbations of the optimal ball decompose into angular modes,
and the constrained second variation diagonalizes over them: each mode k
contributes omega_k times its squared coefficients. omega_k combines the
time integral of the interface value of z_k (the backward response to
the unit ring load y_k) with the interface slope of the time-integrated
adjoint. The module also exposes the volume multiplier, the first-order
criticality residual, the penalized set functional on deformed balls,
and a finite-difference validation of the quadratic model against actual
deformed-ball solves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .controls import Control, deformed_ball_control, reference_control
from .functionals import ProblemSetup, adjoint_switch, evaluate_jt
from .geometry import RadialGrid
from .radial_pde import (ModalProblem, normal_derivative_at, solve_backward,
                         solve_jump_forward, time_integral)

__all__ = [
    "DeformationCoeffs",
    "SpectrumReport",
    "FdHessianCheck",
    "compute_spectrum",
    "lagrange_multiplier",
    "criticality_check",
    "quadratic_form",
    "lagrangian_value",
    "fd_hessian_check",
    "validate_spectrum",
]

FD_TAUS = (4e-3, 2e-3, 1e-3)
FD_MODE_CAP = 4  # indicator quadrature in theta degrades for higher modes


@dataclass(frozen=True)
class DeformationCoeffs:
    """Mean-zero normal trace sum_k alpha_k cos(k t) + beta_k sin(k t).

    Modes start at k = 1; a mean component would change volume at first
    order and is excluded by the type. tau is the bookkeeping amplitude
    used when building deformed sets from these coefficients.
    """

    alphas: tuple = ()
    betas: tuple = ()
    tau: float = 1e-3

    def __post_init__(self):
        a = tuple(float(x) for x in self.alphas)
        b = tuple(float(x) for x in self.betas)
        if not all(np.isfinite(a + b)) or not np.isfinite(self.tau):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "betas", b)

    @property
    def max_mode(self) -> int:
        return max(len(self.alphas), len(self.betas))

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.square(self.alphas))
                     + np.sum(np.square(self.betas)))

    def normal_trace(self, theta: np.ndarray) -> np.ndarray:
        v = np.zeros_like(theta)
        for k, a in enumerate(self.alphas, start=1):
            v += a * np.cos(k * theta)
        for k, b in enumerate(self.betas, start=1):
            v += b * np.sin(k * theta)
        return v


def single_mode(k: int, trig: str = "cos", tau: float = 1e-3
                ) -> DeformationCoeffs:
    """Unit coefficient on one mode, zeros elsewhere."""
    if k < 1:
        raise ValueError("modes start at k = 1")
    coeff = tuple([0.0] * (k - 1) + [1.0])
    if trig == "cos":
        return DeformationCoeffs(alphas=coeff, tau=tau)
    if trig == "sin":
        return DeformationCoeffs(betas=coeff, tau=tau)
    raise ValueError("trig must be 'cos' or 'sin'")


@dataclass(frozen=True)
class SpectrumReport:
    """Modal Hessian coefficients with their qualitative flags."""

    omegas: np.ndarray = field(repr=False)
    r_star: float = 0.5
    monotone_ok: bool = False
    omega1_negative: bool = False
    fd_errors: dict = field(default_factory=dict)

    CSV_HEADER = "k,omega_k,fd_error"

    def __post_init__(self):
        v = np.asarray(self.omegas, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValueError("omegas must be a finite vector")
        object.__setattr__(self, "omegas", v)

    def csv_rows(self) -> list:
        rows = []
        for i, om in enumerate(self.omegas, start=1):
            err = self.fd_errors.get(i)
            tail = format(err, ".17g") if err is not None else "nan"
            rows.append(f"{i},{format(om, '.17g')},{tail}")
        return rows

    def json_summary(self) -> str:
        doc = {"omegas": self.omegas.tolist(),
               "r_star": self.r_star,
               "monotone_ok": self.monotone_ok,
               "omega1_negative": self.omega1_negative,
               "fd_errors": {str(k): v for k, v in
                             sorted(self.fd_errors.items())}}
        return json.dumps(doc, sort_keys=True)


_PSI_CACHE: dict = {}


def _reference_psi(setup: ProblemSetup) -> np.ndarray:
    key = setup.digest()
    if key not in _PSI_CACHE:
        ref = reference_control(setup.grid, setup.spec)
        _PSI_CACHE[key] = np.asarray(adjoint_switch(ref, setup).psi)
    return _PSI_CACHE[key]


def _require_base_setting(setup: ProblemSetup) -> None:
    if setup.epsilon != 0.0:
        raise ValueError("shape calculus here uses the plain running cost"
                         " (epsilon = 0)")
    if setup.grid.n != 2:
        raise ValueError("angular mode decomposition needs n = 2")


def lagrange_multiplier(setup: ProblemSetup) -> float:
    """Volume multiplier: minus the boundary value of the time-integrated
    adjoint of the reference ball."""
    _require_base_setting(setup)
    psi = _reference_psi(setup)
    return -float(psi[setup.grid.j_star])


def compute_spectrum(K: int, setup: ProblemSetup) -> SpectrumReport:
    """Modal coefficients omega_k of the constrained second variation.

    For each mode, y_k is the forward response to the unit ring load on
    the interface and z_k the backward solve with source y_k. omega_k
    adds the interface slope of the time-integrated adjoint to the time
    integral of z_k at the interface. The 2*pi angular measure of the
    boundary circle is folded in here, so that (r_star/2) * sum of
    omega_k * (alpha_k^2 + beta_k^2) is exactly the second difference
    quotient of the penalized functional (see fd_hessian_check).
    """
    _require_base_setting(setup)
    grid, tgrid = setup.grid, setup.tgrid
    if K < 1:
        raise ValueError("need at least one mode")
    if K * grid.dr / grid.r_star > 0.5:
        raise ValueError(f"mode {K} is under-resolved on this grid")
    psi = _reference_psi(setup)
    p_slope = normal_derivative_at(psi, grid.r_star, side="centered",
                                   grid=grid)
    omegas = np.empty(K)
    for k in range(1, K + 1):
        y = solve_jump_forward(grid, tgrid, k, 1.0)
        z = solve_backward(ModalProblem(grid=grid, tgrid=tgrid, mode=k,
                                        source=y.values))
        omegas[k - 1] = 2.0 * np.pi * (
            time_integral(z, node=grid.j_star) + p_slope)
    return SpectrumReport(omegas=omegas, r_star=grid.r_star,
                          monotone_ok=bool(np.all(np.diff(omegas) < 0.0)),
                          omega1_negative=bool(omegas[0] < 0.0))


def criticality_check(trace, setup: ProblemSetup,
                      n_ang: int = 1024) -> float:
    """First shape derivative of the cost at the ball along a normal trace.

    Assembled as the boundary quadrature of trace times the adjoint time
    integral; mean-zero traces make it vanish. Raw angular sample arrays
    are accepted and rejected if they carry a mean (volume-changing)
    component.
    """
    _require_base_setting(setup)
    grid = setup.grid
    if isinstance(trace, DeformationCoeffs):
        theta = 2.0 * np.pi * np.arange(n_ang) / n_ang
        v = trace.normal_trace(theta)
    else:
        v = np.asarray(trace, dtype=float)
        if v.ndim != 1 or v.size < 8:
            raise ValueError("trace must be a 1d angular sample array")
        scale = max(float(np.abs(v).max()), 1.0)
        if abs(float(v.mean())) > 1e-12 * scale:
            raise ValueError("trace has a mean (volume-changing) component")
        n_ang = v.size
    psi_boundary = float(_reference_psi(setup)[grid.j_star])
    quad = 2.0 * np.pi / n_ang * float(v.sum())
    return grid.r_star * psi_boundary * quad


def quadratic_form(coeffs: DeformationCoeffs,
                   spectrum: SpectrumReport) -> float:
    """(r_star/2) * sum_k omega_k * (alpha_k^2 + beta_k^2)."""
    if coeffs.max_mode > spectrum.omegas.size:
        raise ValueError("coefficients reach beyond the computed spectrum")
    total = 0.0
    for k, a in enumerate(coeffs.alphas, start=1):
        total += spectrum.omegas[k - 1] * a * a
    for k, b in enumerate(coeffs.betas, start=1):
        total += spectrum.omegas[k - 1] * b * b
    return 0.5 * spectrum.r_star * total


def _exact_volume(f: Control) -> float:
    """Set volume of a deformed ball from its boundary coefficients.

    The squared boundary radius is a trig polynomial, so the angular
    integral reduces to the constant and the half sum of squares.
    """
    p = f.params
    c = f.grid.r_star + p["offset"]
    power = 0.5 * (np.sum(np.square(p["alphas"]))
                   + np.sum(np.square(p["betas"])))
    return float(np.pi * (c * c + p["tau"] ** 2 * power))


def lagrangian_value(f: Control, setup: ProblemSetup) -> float:
    """Cost minus multiplier-weighted exact volume, on deformed balls.

    The volume is the analytic set volume, not the grid-sampled mass, so
    second differences in tau are not polluted by O(dr) snapping noise.
    """
    _require_base_setting(setup)
    if f.kind != "deformed_ball":
        raise ValueError("penalized values are defined for deformed balls")
    return evaluate_jt(f, setup) + lagrange_multiplier(setup) * _exact_volume(f)


@dataclass(frozen=True)
class FdHessianCheck:
    """Second-difference quotients of the penalized functional vs the
    quadratic model, over a list of amplitudes."""

    taus: tuple
    quotients: tuple
    reference: float
    rel_errors: tuple
    converging: bool


def fd_hessian_check(coeffs: DeformationCoeffs, tau_list, setup: ProblemSetup,
                     spectrum: SpectrumReport | None = None) -> FdHessianCheck:
    """Validate the quadratic model by actual deformed-ball solves.

    Computes [L(tau phi) + L(-tau phi) - 2 L(0)] / tau^2 for each tau and
    compares with quadratic_form(coeffs). Criticality kills the first
    order term, so the quotient converges at O(tau^2); non-monotone error
    decay across tau_list is flagged rather than raised.
    """
    _require_base_setting(setup)
    if coeffs.max_mode > FD_MODE_CAP:
        raise ValueError("finite-difference validation is limited to modes"
                         f" k <= {FD_MODE_CAP}")
    taus = tuple(float(t) for t in tau_list)
    if not taus or min(taus) <= 0.0:
        raise ValueError("amplitudes must be positive")
    if spectrum is None:
        spectrum = compute_spectrum(max(coeffs.max_mode, 1), setup)
    reference = quadratic_form(coeffs, spectrum)
    grid = setup.grid
    a, b = coeffs.alphas, coeffs.betas
    neg_a = tuple(-x for x in a)
    neg_b = tuple(-x for x in b)
    base = lagrangian_value(deformed_ball_control(0.0, a, b, grid,
                                                  setup.spec), setup)
    quots = []
    errs = []
    for tau in taus:
        plus = lagrangian_value(deformed_ball_control(tau, a, b, grid,
                                                      setup.spec), setup)
        minus = lagrangian_value(deformed_ball_control(tau, neg_a, neg_b,
                                                       grid, setup.spec),
                                 setup)
        q = (plus + minus - 2.0 * base) / tau ** 2
        quots.append(q)
        if reference != 0.0:
            errs.append(abs(q - reference) / abs(reference))
        else:
            errs.append(abs(q))
    order = np.argsort(taus)[::-1]  # large to small amplitude
    seq = np.asarray(errs)[order]
    # decay may bottom out at the geometric sampling noise floor, well
    # below the model-validation tolerance; do not flag that as divergence
    ok = (np.diff(seq) <= 1e-12 + 0.2 * seq[:-1]) | (seq[1:] <= 1e-4)
    converging = bool(np.all(ok))
    return FdHessianCheck(taus=taus, quotients=tuple(quots),
                          reference=reference, rel_errors=tuple(errs),
                          converging=converging)


def validate_spectrum(K: int, setup: ProblemSetup, fd_modes=(1, 2, 3, 4),
                      tau_list=FD_TAUS) -> SpectrumReport:
    """Spectrum with finite-difference errors filled for the low modes."""
    report = compute_spectrum(K, setup)
    errors = {}
    for k in fd_modes:
        if k > K:
            raise ValueError("fd_modes must lie within the spectrum")
        check = fd_hessian_check(single_mode(k), tau_list, setup,
                                 spectrum=report)
        finest = int(np.argmin(tau_list))
        errors[int(k)] = check.rel_errors[finest]
    return replace(report, fd_errors=errors)
