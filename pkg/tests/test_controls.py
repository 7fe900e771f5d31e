"""Control families: coverage exactness, bathtub fills, competitor
geometry, samplers, projection, and serialization."""

import numpy as np
import pytest

from diskheat.geometry import build_radial_grid, l1_distance
from diskheat.controls import (
    AdmissibleSpec,
    annulus_control,
    annulus_radii,
    bathtub_maximizer,
    control_from_json,
    control_to_json,
    default_spec,
    deformed_ball_control,
    interval_coverage,
    lens_area,
    oscillating_annulus_control,
    project_admissible,
    reference_control,
    sample_bangbang_at_distance,
    sample_random_admissible,
    shifted_ball_control,
)


def _random_admissible_batch(rng, grid, v0, count):
    """Vectorized draws from the admissible class: push random profiles
    toward 0 or 1 until the mass constraint is met exactly."""
    masses = grid.node_masses()
    vol = grid.domain_volume
    f = rng.random((count, grid.M + 1))
    mass = f @ masses
    scale_down = v0 / mass
    scale_up = (vol - v0) / (vol - mass)
    f_down = f * scale_down[:, None]
    f_up = 1.0 - (1.0 - f) * scale_up[:, None]
    return np.where((mass > v0)[:, None], f_down, f_up)


def test_default_spec_is_quarter_pi(grid_default):
    assert default_spec(grid_default).v0 == pytest.approx(np.pi / 4,
                                                          rel=1e-15)


def test_spec_validation(grid_default):
    with pytest.raises(ValueError):
        AdmissibleSpec(v0=0.0).validate(grid_default)
    with pytest.raises(ValueError):
        AdmissibleSpec(v0=4.0).validate(grid_default)


def test_interval_coverage_partition_of_unity(grid_default):
    cov = interval_coverage(grid_default, [(0.0, grid_default.R)])
    assert np.allclose(cov, 1.0, atol=1e-14)


@pytest.mark.parametrize("n", [2, 3])
def test_interval_coverage_exact_measure(n, rng):
    grid = build_radial_grid(M=128, n=n)
    omega = grid.unit_ball_volume
    masses = grid.node_masses()
    for _ in range(20):
        a, b = np.sort(rng.random(2))
        cov = interval_coverage(grid, [(a, b)])
        exact = omega * (b**n - a**n)
        assert abs(np.dot(masses, cov) - exact) <= 1e-13
        assert cov.min() >= 0.0 and cov.max() <= 1.0


def test_reference_control(grid_default):
    ref = reference_control(grid_default)
    v0 = default_spec(grid_default).v0
    assert ref.per_slice_mass() == pytest.approx(v0, rel=1e-14)
    interior = ref.values[:grid_default.j_star]
    assert np.all(interior == 1.0)
    assert np.all(ref.values[grid_default.j_star + 1:] == 0.0)
    frac = (ref.values > 0) & (ref.values < 1)
    assert np.sum(frac) <= 1


def test_bathtub_of_decreasing_psi_is_reference(grid_default):
    spec = default_spec(grid_default)
    ref = reference_control(grid_default, spec)
    for psi in (np.exp(-grid_default.nodes),
                1.0 - grid_default.nodes**2,
                1.0 / (1.0 + grid_default.nodes)):
        bt = bathtub_maximizer(psi, grid_default, spec)
        assert np.allclose(bt.values, ref.values, atol=1e-12)
        assert not bt.degenerate


def test_bathtub_constant_psi_degenerate(grid_default):
    spec = default_spec(grid_default)
    bt = bathtub_maximizer(np.ones(grid_default.M + 1), grid_default, spec)
    assert bt.degenerate
    assert bt.per_slice_mass() == pytest.approx(spec.v0, abs=1e-12)


def test_bathtub_plateau_flag(grid_default):
    # threshold lands inside a wide plateau: fill is optimal but not unique
    spec = default_spec(grid_default)
    psi = np.where(grid_default.nodes < 0.3, 2.0, 1.0)
    bt = bathtub_maximizer(psi, grid_default, spec)
    assert bt.degenerate
    assert bt.per_slice_mass() == pytest.approx(spec.v0, abs=1e-12)


def test_bathtub_brute_force_dominance():
    # exact maximizer property against 10^4 vectorized admissible draws
    grid = build_radial_grid(M=64)
    spec = default_spec(grid)
    rng = np.random.default_rng(123)
    psi = rng.standard_normal(grid.M + 1)
    bt = bathtub_maximizer(psi, grid, spec)
    masses = grid.node_masses()
    best = float(np.dot(masses * psi, bt.values))
    batch = _random_admissible_batch(rng, grid, spec.v0, 10_000)
    values = batch @ (masses * psi)
    assert values.max() <= best + 1e-11
    assert np.allclose(batch @ masses, spec.v0, atol=1e-10)


def test_annulus_radii_closed_form(grid_default):
    spec = default_spec(grid_default)
    rad = annulus_radii(0.05 * np.pi, grid_default, spec)
    assert rad.r_minus == pytest.approx(0.5 - np.sqrt(0.25 - 0.025),
                                        rel=1e-14)
    assert rad.r_plus == pytest.approx(np.sqrt(0.275) - 0.5, rel=1e-14)


def test_annulus_radii_volume_identities(grid_default):
    spec = default_spec(grid_default)
    rs = grid_default.r_star
    for delta in (0.0, 1e-4, 0.02, 0.3):
        rad = annulus_radii(delta, grid_default, spec)
        vol = np.pi * ((rs - rad.r_minus) ** 2
                       + (rs + rad.r_plus) ** 2 - rs**2)
        sym = np.pi * (rs**2 - (rs - rad.r_minus) ** 2) + np.pi * (
            (rs + rad.r_plus) ** 2 - rs**2)
        assert vol == pytest.approx(spec.v0, abs=1e-12)
        assert sym == pytest.approx(delta, abs=1e-12)


def test_annulus_radii_guards(grid_default):
    spec = default_spec(grid_default)
    with pytest.raises(ValueError):
        annulus_radii(-1.0, grid_default, spec)
    with pytest.raises(ValueError):
        annulus_radii(2.1 * spec.v0, grid_default, spec)


def test_annulus_small_delta_linear_rate(grid_default):
    # both boundary speeds approach the same constant 1/(2 S r*^(n-1))
    spec = default_spec(grid_default)
    c0 = 1.0 / (2.0 * grid_default.sphere_measure
                * grid_default.r_star ** (grid_default.n - 1))
    delta = 1e-4 * spec.v0
    rad = annulus_radii(delta, grid_default, spec)
    assert rad.r_minus / delta == pytest.approx(c0, rel=1e-2)
    assert rad.r_plus / delta == pytest.approx(c0, rel=1e-2)
    assert rad.r_minus / rad.r_plus == pytest.approx(1.0, rel=1e-2)


def test_annulus_control_mass_and_distance(grid_default):
    spec = default_spec(grid_default)
    delta = 0.08 * spec.v0
    ann = annulus_control(delta, grid_default)
    assert ann.per_slice_mass() == pytest.approx(spec.v0, rel=1e-13)
    assert ann.l1_to_reference() == delta
    vals = ann.radial_mean()
    assert vals.min() >= 0.0 and vals.max() <= 1.0


def test_shifted_ball_mass_and_channels(grid_default):
    spec = default_spec(grid_default)
    sb = shifted_ball_control(0.05, grid_default)
    assert sb.per_slice_mass() == pytest.approx(spec.v0, rel=1e-12)
    channels = sb.channels()
    assert all(c.trig == "cos" for c in channels)
    assert channels[0].mode == 0
    # geometric distance through the lens overlap formula
    d, rho = 0.05, grid_default.r_star
    expected = 2.0 * (np.pi * rho**2 - lens_area(d, rho))
    assert sb.l1_to_reference() == pytest.approx(expected, rel=1e-14)


def test_shifted_ball_guards(grid_default):
    with pytest.raises(ValueError):
        shifted_ball_control(0.55, grid_default)
    with pytest.raises(ValueError):
        shifted_ball_control(0.51, grid_default)


def test_lens_area_against_grid_count():
    d, rho = 0.2, 0.5
    xs = np.linspace(-1, 1, 2001)
    X, Y = np.meshgrid(xs, xs)
    cell = (xs[1] - xs[0]) ** 2
    inside = ((X**2 + Y**2 < rho**2)
              & ((X - d) ** 2 + Y**2 < rho**2))
    assert lens_area(d, rho) == pytest.approx(inside.sum() * cell, abs=2e-3)
    assert lens_area(0.0, rho) == pytest.approx(np.pi * rho**2, rel=1e-14)
    assert lens_area(2 * rho, rho) == 0.0


def test_deformed_ball_tau_zero_is_reference(grid_default):
    ref = reference_control(grid_default)
    db = deformed_ball_control(0.0, [0.0, 1.0], [0.5], grid_default)
    assert np.allclose(db.radial_mean(), ref.values, atol=1e-14)


def test_deformed_ball_volume_correction(grid_default):
    spec = default_spec(grid_default)
    tau = 1e-2
    db = deformed_ball_control(tau, [1.0, 0.5], [0.25], grid_default)
    assert db.per_slice_mass() == pytest.approx(spec.v0, rel=1e-13)
    # uniform offset is second order in tau
    assert abs(db.params["offset"]) <= tau**2
    raw = deformed_ball_control(tau, [1.0, 0.5], [0.25], grid_default,
                                volume_corrected=False)
    assert abs(raw.per_slice_mass() - spec.v0) > 1e-6


def test_deformed_ball_mode2_channel_thin_shell(grid_default):
    tau = 1e-2
    db = deformed_ball_control(tau, [0.0, 1.0], [0.0], grid_default)
    ch = {(c.mode, c.trig): c.values for c in db.channels()}
    a2 = ch[(2, "cos")]
    nodes = grid_default.nodes
    support = nodes[np.abs(a2) > 1e-10]
    assert np.all(np.abs(support - grid_default.r_star)
                  <= tau + 3 * grid_default.dr)
    # radial line integral of the cos(2t) channel equals tau * alpha_2
    assert np.trapezoid(a2, nodes) == pytest.approx(tau, rel=5e-2)


def test_deformed_ball_guards(grid_default):
    with pytest.raises(ValueError):
        deformed_ball_control(0.5, [2.0], [0.0], grid_default)
    with pytest.raises(ValueError):
        # boundary radius exits the domain before correction fails
        deformed_ball_control(0.3, [0.0, 0.0, 1.8], [0.0], grid_default,
                              volume_corrected=False)


def test_oscillating_annulus(grid_default, tgrid_small):
    spec = default_spec(grid_default)
    osc = oscillating_annulus_control(0.2, 2, grid_default, tgrid_small)
    masses = osc.per_slice_mass()
    assert np.max(np.abs(masses - spec.v0)) <= 1e-12
    ref = reference_control(grid_default)
    assert np.array_equal(osc.values[0], ref.values)
    deltas = osc.l1_to_reference()
    expect = 0.2 * np.abs(np.sin(2 * np.pi * tgrid_small.times))
    assert np.allclose(deltas, expect, atol=1e-14)


def test_project_admissible_fixed_points(grid_default):
    spec = default_spec(grid_default)
    ref = reference_control(grid_default, spec)
    out = project_admissible(ref.values, grid_default, spec)
    assert np.array_equal(out.values, ref.values)
    const = np.full(grid_default.M + 1, spec.v0 / grid_default.domain_volume)
    assert np.allclose(project_admissible(const, grid_default).values, const)


def test_project_admissible_doubled_reference(grid_default):
    ref = reference_control(grid_default)
    out = project_admissible(2.0 * ref.values, grid_default)
    assert np.allclose(out.values, ref.values, atol=1e-12)


def test_project_admissible_random(grid_default, rng):
    spec = default_spec(grid_default)
    v = 3.0 * rng.standard_normal(grid_default.M + 1)
    out = project_admissible(v, grid_default, spec)
    assert out.values.min() >= 0.0 and out.values.max() <= 1.0
    assert out.per_slice_mass() == pytest.approx(spec.v0, abs=1e-10)


def test_sampler_bangbang_radial(grid_default):
    spec = default_spec(grid_default)
    for seed in range(8):
        c = sample_random_admissible(seed, "bangbang-radial", grid_default)
        frac = (c.values > 1e-12) & (c.values < 1 - 1e-12)
        assert np.sum(frac) <= 1
        assert c.per_slice_mass() == pytest.approx(spec.v0, abs=1e-12)


def test_sampler_smooth(grid_default):
    spec = default_spec(grid_default)
    for seed in range(8):
        c = sample_random_admissible(seed, "smooth", grid_default)
        assert c.values.min() >= 0.0 and c.values.max() <= 1.0
        assert c.per_slice_mass() == pytest.approx(spec.v0, abs=1e-10)


def test_sampler_oscillating(grid_default, tgrid_small):
    spec = default_spec(grid_default)
    c = sample_random_admissible(9, "time-oscillating-annulus", grid_default,
                                 tgrid=tgrid_small)
    assert np.max(np.abs(c.per_slice_mass() - spec.v0)) <= 1e-12
    with pytest.raises(ValueError):
        sample_random_admissible(9, "time-oscillating-annulus", grid_default)


def test_sampler_unknown_kind(grid_default):
    with pytest.raises(ValueError):
        sample_random_admissible(0, "nope", grid_default)


def test_bangbang_at_distance_exact_l1(grid_default):
    spec = default_spec(grid_default)
    for local in (True, False):
        for seed, delta in ((0, 1e-3), (1, 1e-2), (2, 0.1 * spec.v0)):
            c = sample_bangbang_at_distance(seed, delta, grid_default,
                                            local=local)
            assert c.l1_to_reference() == pytest.approx(delta, rel=1e-12)
            assert c.per_slice_mass() == pytest.approx(spec.v0, abs=1e-12)
    with pytest.raises(ValueError):
        sample_bangbang_at_distance(0, 2.2 * spec.v0, grid_default,
                                    local=False)


def test_annulus_dominates_same_distance_draws():
    # among competitors at fixed distance, the annulus pairs best with a
    # decreasing radial weight
    grid = build_radial_grid(M=64)
    spec = default_spec(grid)
    psi = np.exp(-2.0 * grid.nodes)
    masses = grid.node_masses()
    delta = 0.05 * spec.v0
    ann = annulus_control(delta, grid, spec)
    ann_value = float(np.dot(masses * psi, ann.radial_mean()))
    worst = np.inf
    for seed in range(150):
        c = sample_bangbang_at_distance(seed, delta, grid,
                                        local=bool(seed % 2))
        worst = min(worst, ann_value - float(np.dot(masses * psi, c.values)))
    assert worst >= -1e-9


def test_bathtub_quadratic_gap_lower_bound():
    # the pairing gap of the bathtub fill has a uniform quadratic lower
    # bound in the distance, with one fitted constant across a family of
    # decreasing weights
    grid = build_radial_grid(M=128)
    spec = default_spec(grid)
    masses = grid.node_masses()
    js = grid.j_star
    ratios = []
    for a in (1.0, 2.0, 3.0):
        psi = np.exp(-a * grid.nodes)
        slope = a * np.exp(-a * grid.r_star)  # -psi'(r*)
        bt = bathtub_maximizer(psi, grid, spec)
        for seed in range(10):
            for delta in (1e-3, 1e-2, 5e-2):
                c = sample_bangbang_at_distance(seed, delta, grid)
                gap = float(np.dot(masses * psi, bt.values - c.values))
                ratios.append(gap / (slope * delta**2))
    fitted = min(ratios)
    assert fitted > 0.0


def test_json_round_trip(grid_default, tgrid_small):
    spec = default_spec(grid_default)
    controls = [
        reference_control(grid_default, spec),
        annulus_control(0.1, grid_default, spec),
        shifted_ball_control(0.04, grid_default, spec),
        deformed_ball_control(5e-3, [1.0], [0.5], grid_default, spec),
        oscillating_annulus_control(0.15, 3, grid_default, tgrid_small, spec),
        sample_random_admissible(7, "bangbang-radial", grid_default, spec),
    ]
    for ctl in controls:
        back = control_from_json(control_to_json(ctl), grid_default)
        a = np.asarray(ctl.radial_mean())
        b = np.asarray(back.radial_mean())
        assert np.max(np.abs(a - b)) <= 1e-12
        assert back.kind == ctl.kind


def test_json_grid_fingerprint_mismatch(grid_default, grid_small):
    doc = control_to_json(reference_control(grid_default))
    with pytest.raises(ValueError):
        control_from_json(doc, grid_small)
