"""Command-line front end: presets, config files, artifacts, reports.

One JSON config document drives every command; flags override file
values, and each flag has a config equivalent. Commands print one
pass/fail line per check, write the module CSVs plus a JSON manifest
under the output directory, and exit 0 only when every enabled check
passed (2 on usage or config errors).
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .controls import (AdmissibleSpec, bathtub_maximizer, default_spec,
                       reference_control, sample_bangbang_at_distance,
                       sample_random_admissible)
from .functionals import (ProblemSetup, adjoint_switch, default_setup,
                          evaluate_jt_eps, initial_condition)
from .geometry import TimeGrid, build_radial_grid, unit_ball_volume
from .shape_hessian import SpectrumReport, compute_spectrum
from .verifier import (CheckResult, check_penalized_optimality,
                       check_radial_monotonicity, check_switch_nondegenerate,
                       optimize_fixed_point, run_talenti_battery,
                       sweep_deficit)

__all__ = ["RunConfig", "ConfigError", "load_config", "report", "main"]

ENV_OUT = "DISKHEAT_OUT"
TI_FAMILIES = ("annulus", "shifted-ball", "bangbang")
TD_FAMILIES = ("annulus", "oscillating-annulus-m1", "oscillating-annulus-m2",
               "oscillating-annulus-m4")


class ConfigError(ValueError):
    """Invalid configuration; names the field and the reason."""

    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{field_name}: {reason}")
        self.field_name = field_name
        self.reason = reason


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings; one document drives every command."""

    R: float = 1.0
    M: int = 256
    n: int = 2
    v0: float | None = None
    T: float = 1.0
    N: int = 512
    theta: float = 0.5
    eps: float = 0.1
    u0_family: str = "zero"
    u0_amplitude: float = 0.0
    families: tuple | None = None
    deltas: tuple = ()
    modes: int = 16
    seed: int = 42
    samples: int = 50
    draws: int = 200
    starts: int = 10
    out_dir: str | None = None

    def resolved_out_dir(self) -> str:
        if self.out_dir:
            return self.out_dir
        return os.environ.get(ENV_OUT, "artifacts")


def _require(cond: bool, field_name: str, reason: str) -> None:
    if not cond:
        raise ConfigError(field_name, reason)


def _as_int(value, field_name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field_name, "must be an integer")
    return value


def _as_real(value, field_name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field_name, "must be a number")
    v = float(value)
    if not np.isfinite(v):
        raise ConfigError(field_name, "must be finite")
    return v


def _block(doc: dict, name: str, allowed: tuple) -> dict:
    sub = doc.get(name, {})
    if not isinstance(sub, dict):
        raise ConfigError(name, "must be an object")
    for key in sub:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown field")
    return sub


def _validate(cfg: RunConfig) -> RunConfig:
    _require(cfg.R > 0, "geometry.R", "must be positive")
    _require(cfg.M >= 8, "geometry.M", "needs at least 8 cells")
    _require(cfg.n >= 1, "geometry.n", "must be a positive dimension")
    if cfg.v0 is not None:
        vol = unit_ball_volume(cfg.n) * cfg.R**cfg.n
        _require(0.0 < cfg.v0 < vol, "geometry.V0",
                 "must lie strictly between 0 and the domain volume")
    _require(cfg.T > 0, "time.T", "must be positive")
    _require(cfg.N >= 1, "time.N", "needs at least one step")
    _require(0.5 <= cfg.theta <= 1.0, "time.theta",
             "must lie in [1/2, 1] (unconditionally stable range)")
    _require(cfg.eps >= 0.0, "problem.eps", "must be nonnegative")
    _require(cfg.u0_family in ("zero", "parabolic"), "problem.u0.family",
             "must be 'zero' or 'parabolic'")
    _require(cfg.u0_amplitude >= 0.0, "problem.u0.amplitude",
             "must be nonnegative")
    if cfg.families is not None:
        _require(len(cfg.families) > 0, "experiment.families",
                 "must not be empty")
        for f in cfg.families:
            _require(isinstance(f, str) and f, "experiment.families",
                     "entries must be nonempty strings")
    for d in cfg.deltas:
        _require(d > 0, "experiment.deltas", "distances must be positive")
    _require(cfg.modes >= 1, "experiment.modes", "needs at least one mode")
    _require(cfg.seed >= 0, "experiment.seed", "must be nonnegative")
    _require(cfg.samples >= 1, "experiment.samples", "needs at least one")
    _require(cfg.draws >= 1, "experiment.draws", "needs at least one")
    _require(cfg.starts >= 1, "experiment.starts", "needs at least one")
    return cfg


def load_config(path: str | None) -> RunConfig:
    """Read and validate a JSON config document (defaults when path is
    None)."""
    if path is None:
        return _validate(RunConfig())
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON: {e}")
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be an object")
    for key in doc:
        if key not in ("geometry", "time", "problem", "experiment",
                       "output"):
            raise ConfigError(key, "unknown section")
    geo = _block(doc, "geometry", ("R", "M", "n", "V0"))
    tim = _block(doc, "time", ("T", "N", "theta"))
    prob = _block(doc, "problem", ("eps", "u0"))
    exp = _block(doc, "experiment", ("families", "deltas", "modes", "seed",
                                     "samples", "draws", "starts"))
    out = _block(doc, "output", ("dir",))
    u0 = prob.get("u0", {})
    if not isinstance(u0, dict):
        raise ConfigError("problem.u0", "must be an object")
    for key in u0:
        if key not in ("family", "amplitude"):
            raise ConfigError(f"problem.u0.{key}", "unknown field")
    fams = exp.get("families")
    if fams is not None and not isinstance(fams, list):
        raise ConfigError("experiment.families", "must be a list")
    deltas = exp.get("deltas", [])
    if not isinstance(deltas, list):
        raise ConfigError("experiment.deltas", "must be a list")
    cfg = RunConfig(
        R=_as_real(geo.get("R", 1.0), "geometry.R"),
        M=_as_int(geo.get("M", 256), "geometry.M"),
        n=_as_int(geo.get("n", 2), "geometry.n"),
        v0=None if geo.get("V0") is None
        else _as_real(geo.get("V0"), "geometry.V0"),
        T=_as_real(tim.get("T", 1.0), "time.T"),
        N=_as_int(tim.get("N", 512), "time.N"),
        theta=_as_real(tim.get("theta", 0.5), "time.theta"),
        eps=_as_real(prob.get("eps", 0.1), "problem.eps"),
        u0_family=u0.get("family", "zero"),
        u0_amplitude=_as_real(u0.get("amplitude", 0.0),
                              "problem.u0.amplitude"),
        families=None if fams is None else tuple(fams),
        deltas=tuple(_as_real(d, "experiment.deltas") for d in deltas),
        modes=_as_int(exp.get("modes", 16), "experiment.modes"),
        seed=_as_int(exp.get("seed", 42), "experiment.seed"),
        samples=_as_int(exp.get("samples", 50), "experiment.samples"),
        draws=_as_int(exp.get("draws", 200), "experiment.draws"),
        starts=_as_int(exp.get("starts", 10), "experiment.starts"),
        out_dir=out.get("dir"),
    )
    return _validate(cfg)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.modes is not None:
        updates["modes"] = args.modes
    if args.eps is not None:
        updates["eps"] = args.eps
    if args.grid is not None:
        updates["M"] = args.grid
    if args.steps is not None:
        updates["N"] = args.steps
    if args.families is not None:
        updates["families"] = tuple(
            s.strip() for s in args.families.split(",") if s.strip())
    if args.deltas is not None:
        try:
            updates["deltas"] = tuple(float(s) for s in
                                      args.deltas.split(",") if s.strip())
        except ValueError:
            raise ConfigError("experiment.deltas",
                              "must be comma-separated numbers")
    return _validate(replace(cfg, **updates)) if updates else cfg


# -- problem assembly ---------------------------------------------------------

def _build_setup(cfg: RunConfig, epsilon: float) -> ProblemSetup:
    r_star = 0.5 * cfg.R
    if cfg.v0 is not None:
        r_star = (cfg.v0 / unit_ball_volume(cfg.n)) ** (1.0 / cfg.n)
    try:
        grid = build_radial_grid(R=cfg.R, M=cfg.M, n=cfg.n, r_star=r_star)
        tgrid = TimeGrid(T=cfg.T, N=cfg.N, theta=cfg.theta)
    except ValueError as e:
        raise ConfigError("geometry", str(e))
    u0 = None
    if cfg.u0_family == "parabolic" and cfg.u0_amplitude > 0.0:
        u0 = initial_condition(cfg.u0_amplitude, grid)
    return default_setup(grid, tgrid, epsilon=epsilon, u0=u0)


def _sweep_deltas(cfg: RunConfig, spec: AdmissibleSpec) -> tuple:
    if cfg.deltas:
        return cfg.deltas
    return tuple(np.geomspace(1e-3, 1e-1, 12) * spec.v0)


def _need_planar(cfg: RunConfig, families, what: str) -> None:
    if cfg.n != 2 and any(f in ("shifted-ball",) or
                          f.startswith("oscillating") for f in families):
        raise ConfigError("geometry.n",
                          f"{what} needs the planar setting (n = 2)")


# -- commands -----------------------------------------------------------------

def _cmd_sweep(cfg: RunConfig, out: str, kind: str) -> list[CheckResult]:
    if kind == "td":
        if cfg.eps <= 0.0:
            raise ConfigError("problem.eps",
                              "time-dependent sweeps need epsilon > 0")
        setup = _build_setup(cfg, cfg.eps)
        families = cfg.families or TD_FAMILIES
    else:
        setup = _build_setup(cfg, 0.0)
        families = cfg.families or TI_FAMILIES
    _need_planar(cfg, families, "this sweep")
    deltas = _sweep_deltas(cfg, setup.spec)
    return [sweep_deficit(kind, families, deltas, setup, out_dir=out,
                          seed=cfg.seed)]


def _cmd_spectrum(cfg: RunConfig, out: str) -> list[CheckResult]:
    setup = _build_setup(cfg, 0.0)
    if cfg.n != 2:
        raise ConfigError("geometry.n",
                          "the interface spectrum needs n = 2")
    try:
        rep = compute_spectrum(cfg.modes, setup)
    except ValueError as e:
        raise ConfigError("experiment.modes", str(e))
    path = os.path.join(out, "spectrum.csv")
    with open(path, "w") as fh:
        fh.write(SpectrumReport.CSV_HEADER + "\n")
        for row in rep.csv_rows():
            fh.write(row + "\n")
    omegas = np.asarray(rep.omegas)
    margin = float(-omegas[0]) if omegas.size == 1 else \
        float(min(-omegas[0], np.min(omegas[:-1] - omegas[1:])))
    details = (f"{omegas.size} interface modes; omega1={omegas[0]:.6e}; "
               f"monotone_ok={rep.monotone_ok}, "
               f"omega1_negative={rep.omega1_negative}")
    return [CheckResult(name="spectrum",
                        passed=rep.monotone_ok and rep.omega1_negative,
                        margin=margin, details=details, artifacts=(path,),
                        seed=cfg.seed, setup=setup.canonical())]


def _cmd_talenti(cfg: RunConfig, out: str) -> list[CheckResult]:
    if cfg.n != 2:
        raise ConfigError("geometry.n", "the comparison battery samples "
                                        "planar competitors (n = 2)")
    setup = _build_setup(cfg, 0.0)
    return [run_talenti_battery(cfg.samples, setup, seed=cfg.seed)]


def _cmd_bathtub(cfg: RunConfig, out: str) -> list[CheckResult]:
    if cfg.n != 2:
        raise ConfigError("geometry.n", "the dominance battery samples "
                                        "planar competitors (n = 2)")
    setup = _build_setup(cfg, cfg.eps)
    grid, spec = setup.grid, setup.spec
    ref = reference_control(grid, spec)
    psi = np.asarray(adjoint_switch(ref, setup).psi)
    fill = bathtub_maximizer(psi, grid, spec)
    masses = grid.node_masses()
    base = float(np.dot(masses * psi, fill.values))
    rng = np.random.default_rng(cfg.seed)
    kinds = ("bangbang-radial", "smooth")
    rows = []
    worst = np.inf
    for i in range(cfg.draws):
        if i % 3 == 2:
            delta = float(rng.uniform(0.01, 0.5)) * spec.v0
            g = sample_bangbang_at_distance(int(rng.integers(2**31)), delta,
                                            grid, spec,
                                            local=bool(rng.integers(2)))
            family = "bangbang-at-distance"
        else:
            g = sample_random_admissible(int(rng.integers(2**31)),
                                         kinds[i % 3], grid, spec)
            family = kinds[i % 3]
        gap = (base - float(np.dot(masses * psi, g.radial_mean()))) \
            / abs(base)
        worst = min(worst, gap)
        rows.append((i, family, gap))
    path = os.path.join(out, "bathtub.csv")
    with open(path, "w") as fh:
        fh.write("draw,family,pairing_gap_rel\n")
        for i, family, gap in rows:
            fh.write(f"{i},{family},{gap:.17g}\n")
    lin = CheckResult(
        name="bathtub-dominance", passed=worst >= -1e-9,
        margin=float(worst + 1e-9),
        details=(f"level-set fill vs {cfg.draws} admissible draws; "
                 f"min relative pairing gap {worst:.3e}"),
        artifacts=(path,), seed=cfg.seed, setup=setup.canonical())
    pen = check_penalized_optimality(0.05 * spec.v0,
                                     max(10, cfg.draws // 10), setup,
                                     seed=cfg.seed)
    return [lin, pen]


def _cmd_optimize(cfg: RunConfig, out: str) -> list[CheckResult]:
    setup = _build_setup(cfg, 0.0)
    grid, spec = setup.grid, setup.spec
    tol = 1e-3
    rng = np.random.default_rng(cfg.seed)
    runs = []
    from .controls import Control
    uniform = Control(grid=grid, spec=spec, kind="radial", params={},
                      values=np.full(grid.M + 1,
                                     spec.v0 / grid.domain_volume))
    runs.append(("uniform", 0, uniform))
    for i in range(1, cfg.starts):
        sd = int(rng.integers(2**31))
        runs.append((f"bangbang-{i}", sd,
                     sample_random_admissible(sd, "bangbang-radial", grid,
                                              spec)))
    rows = []
    all_ok = True
    worst_dist = 0.0
    for label, sd, start in runs:
        res = optimize_fixed_point(start, cfg.eps, setup, tol=tol)
        mono = bool(np.all(np.diff(res.objectives) >= -1e-15))
        ok = res.converged and mono
        all_ok = all_ok and ok
        worst_dist = max(worst_dist, res.distances[-1])
        rows.append((label, sd, res.converged, res.n_iterations,
                     res.distances[-1], res.objectives[-1], mono))
    path = os.path.join(out, "optimize.csv")
    with open(path, "w") as fh:
        fh.write("start,seed,converged,iterations,final_distance,"
                 "final_objective,monotone\n")
        for label, sd, conv, n_it, dist, obj, mono in rows:
            fh.write(f"{label},{sd},{conv},{n_it},{dist:.17g},"
                     f"{obj:.17g},{mono}\n")
    margin = tol * grid.domain_volume - worst_dist
    details = (f"{len(runs)} starts; worst final distance {worst_dist:.3e} "
               f"vs tol {tol * grid.domain_volume:.3e}; "
               "objectives nondecreasing" if all_ok else
               f"{len(runs)} starts; some runs failed, see CSV")
    return [CheckResult(name="optimize-ascent", passed=all_ok,
                        margin=float(margin), details=details,
                        artifacts=(path,), seed=cfg.seed,
                        setup=setup.canonical())]


def _cmd_monotonicity(cfg: RunConfig, out: str) -> list[CheckResult]:
    setup = _build_setup(cfg, 0.0)
    res_u = check_radial_monotonicity(setup)
    res_p = check_switch_nondegenerate(cfg.eps if cfg.eps > 0 else 0.1,
                                       0.25 * cfg.R, setup)
    return [res_u, res_p]


COMMANDS = {
    "verify-ti": lambda cfg, out: _cmd_sweep(cfg, out, "ti"),
    "verify-td": lambda cfg, out: _cmd_sweep(cfg, out, "td"),
    "spectrum": _cmd_spectrum,
    "talenti": _cmd_talenti,
    "bathtub": _cmd_bathtub,
    "optimize": _cmd_optimize,
    "monotonicity": _cmd_monotonicity,
}
ALL_ORDER = ("monotonicity", "spectrum", "talenti", "bathtub", "verify-ti",
             "verify-td", "optimize")


def report(artifact_dir: str) -> dict:
    """Merge the manifests in a directory into one summary document."""
    entries = []
    warnings = []
    pattern = os.path.join(artifact_dir, "*.manifest.json")
    for path in sorted(glob.glob(pattern)):
        try:
            with open(path) as fh:
                doc = json.load(fh)
            entries.append({"check_name": doc["check_name"],
                            "passed": doc["passed"],
                            "margin": doc["margin"],
                            "seed": doc.get("seed"),
                            "manifest": os.path.basename(path)})
        except (OSError, json.JSONDecodeError, KeyError) as e:
            warnings.append(f"{os.path.basename(path)}: {e}")
    passed = sum(1 for e in entries if e["passed"])
    return {
        "checks": entries,
        "counts": {"total": len(entries), "passed": passed,
                   "failed": len(entries) - passed},
        "all_passed": passed == len(entries),
        "warnings": warnings,
    }


def _write_manifest(out: str, res: CheckResult) -> str:
    path = os.path.join(out, f"{res.name}.manifest.json")
    with open(path, "w") as fh:
        fh.write(res.json_manifest())
    return path


def _print_result(res: CheckResult) -> None:
    tag = "PASS" if res.passed else "FAIL"
    print(f"[{tag}] {res.name}: margin={res.margin:.6e} ({res.details})")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory "
                        f"(default ${ENV_OUT} or ./artifacts)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--modes", type=int, help="interface modes K")
    common.add_argument("--eps", type=float, help="terminal reward weight")
    common.add_argument("--grid", type=int, help="radial cells M")
    common.add_argument("--steps", type=int, help="time steps N")
    common.add_argument("--families", help="comma-separated competitor "
                                           "families")
    common.add_argument("--deltas", help="comma-separated distances")
    p = argparse.ArgumentParser(
        prog="diskheat",
        description="Verification batteries for heat-source placement on "
                    "a disk.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, blurb in (
            ("verify-ti", "deficit sweep for static competitors"),
            ("verify-td", "deficit sweep for time-dependent competitors"),
            ("spectrum", "interface Hessian spectrum"),
            ("talenti", "concentration comparison battery"),
            ("bathtub", "level-set fill and fixed-distance dominance"),
            ("optimize", "conditional-gradient ascent battery"),
            ("monotonicity", "state and switch slope signs"),
            ("all", "run every battery"),
            ("report", "merge manifests in the output directory")):
        sub.add_parser(name, parents=[common], help=blurb)
    sweep_p = sub.add_parser("sweep", parents=[common],
                             help="deficit sweep with explicit kind")
    sweep_p.add_argument("--kind", choices=("ti", "td"), default="ti")
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        out = cfg.resolved_out_dir()
        os.makedirs(out, exist_ok=True)
        if args.command == "report":
            doc = report(out)
            text = json.dumps(doc, indent=2, sort_keys=True)
            with open(os.path.join(out, "report.json"), "w") as fh:
                fh.write(text)
            print(text)
            return 0
        if args.command == "sweep":
            results = _cmd_sweep(cfg, out, args.kind)
        elif args.command == "all":
            results = []
            for name in ALL_ORDER:
                results.extend(COMMANDS[name](cfg, out))
        else:
            results = COMMANDS[args.command](cfg, out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    summary = os.path.join(out, f"{args.command}.summary.csv")
    with open(summary, "w") as fh:
        fh.write("check,passed,margin\n")
        for res in results:
            fh.write(f"{res.name},{res.passed},{res.margin:.17g}\n")
    for res in results:
        _write_manifest(out, res)
        _print_result(res)
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
