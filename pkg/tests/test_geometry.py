"""Quadrature, cumulative, and distance contracts for the radial grid."""

from __future__ import annotations

import math

import numpy as np
import pytest

from diskheat.geometry import (RadialField, build_radial_grid, ball_cumulative,
                               disk_integral, l1_distance)


def test_weights_sum_exact_n2():
    g = build_radial_grid(R=1.0, M=256, n=2, r_star=0.5)
    assert abs(g.weights.sum() - 0.5) < 1e-12


def test_weights_sum_exact_n3():
    g = build_radial_grid(R=1.0, M=256, n=3, r_star=0.5)
    assert abs(g.weights.sum() - 1.0 / 3.0) < 1e-12


def test_weights_sum_exact_odd_radius():
    g = build_radial_grid(R=2.5, M=200, n=3, r_star=1.0)
    assert abs(g.weights.sum() - 2.5 ** 3 / 3.0) < 1e-12


def test_weights_positive():
    for n in (2, 3):
        g = build_radial_grid(R=1.0, M=64, n=n, r_star=0.5)
        assert (g.weights > 0).all()


def test_degree_one_exactness(rng):
    # disk_integral integrates a + b*r exactly: the weights are hat moments.
    g = build_radial_grid(R=1.0, M=128, n=2, r_star=0.5)
    for _ in range(20):
        a, b = rng.normal(size=2)
        got = disk_integral(a + b * g.nodes, g)
        want = 2.0 * math.pi * (a / 2.0 + b / 3.0)
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_degree_one_exactness_n3(rng):
    g = build_radial_grid(R=1.0, M=128, n=3, r_star=0.5)
    a, b = rng.normal(size=2)
    got = disk_integral(a + b * g.nodes, g)
    want = 4.0 * math.pi * (a / 3.0 + b / 4.0)
    assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_quadratic_integrand_near_exact():
    g = build_radial_grid(R=1.0, M=256, n=2, r_star=0.5)
    got = disk_integral(g.nodes ** 2, g)
    assert abs(got - math.pi / 2.0) < 1e-4


def test_ball_cumulative_linear_integrand_exact():
    g = build_radial_grid(R=1.0, M=256, n=2, r_star=0.5)
    got = ball_cumulative(g.nodes, g, 0.5)
    assert abs(got - math.pi / 12.0) < 1e-12


def test_ball_cumulative_full_ball_matches_disk_integral(rng):
    g = build_radial_grid(R=1.0, M=64, n=2, r_star=0.5)
    f = rng.random(g.M + 1)
    assert abs(ball_cumulative(f, g, g.R) - disk_integral(f, g)) < 1e-12


def test_ball_cumulative_nondecreasing(rng):
    g = build_radial_grid(R=1.0, M=64, n=2, r_star=0.5)
    f = rng.random(g.M + 1)
    radii = np.linspace(0.0, 1.0, 517)
    vals = [ball_cumulative(f, g, r) for r in radii]
    assert (np.diff(vals) >= -1e-14).all()


def test_ball_cumulative_off_node_radius():
    g = build_radial_grid(R=1.0, M=64, n=2, r_star=0.5)
    got = ball_cumulative(np.ones(g.M + 1), g, 0.3777)
    assert abs(got - math.pi * 0.3777 ** 2) < 1e-12


def test_l1_triangle_inequality(rng):
    g = build_radial_grid(R=1.0, M=64, n=2, r_star=0.5)
    f, h, k = (rng.random(g.M + 1) for _ in range(3))
    d_fk = l1_distance(f, k, g)
    d_fh = l1_distance(f, h, g)
    d_hk = l1_distance(h, k, g)
    assert d_fk <= d_fh + d_hk + 1e-12


def test_l1_distance_simple_value():
    g = build_radial_grid(R=1.0, M=64, n=2, r_star=0.5)
    ones = np.ones(g.M + 1)
    assert abs(l1_distance(ones, np.zeros(g.M + 1), g) - math.pi) < 1e-12


def test_l1_polar_stack_matches_radial(rng):
    g = build_radial_grid(R=1.0, M=64, n=2, r_star=0.5)
    f = rng.random(g.M + 1)
    stack = np.tile(f, (32, 1))
    assert abs(l1_distance(stack, np.zeros(g.M + 1), g)
               - l1_distance(f, np.zeros(g.M + 1), g)) < 1e-12


def test_grid_snaps_r_star_and_reports_displacement():
    g = build_radial_grid(R=1.0, M=256, n=2, r_star=0.5003)
    assert g.j_star == 128
    assert g.r_star == g.nodes[128]
    assert abs(g.snap_displacement - (g.r_star - 0.5003)) < 1e-15


def test_grid_rejects_tiny_m():
    with pytest.raises(ValueError):
        build_radial_grid(R=1.0, M=8, n=2, r_star=0.5)


def test_radial_field_shape_guard():
    g = build_radial_grid(R=1.0, M=64, n=2, r_star=0.5)
    with pytest.raises(ValueError):
        RadialField(g, np.zeros(g.M))


def test_domain_volume():
    g = build_radial_grid(R=1.0, M=64, n=2, r_star=0.5)
    assert abs(g.domain_volume - math.pi) < 1e-12
    g3 = build_radial_grid(R=1.0, M=64, n=3, r_star=0.5)
    assert abs(g3.domain_volume - 4.0 * math.pi / 3.0) < 1e-12
