import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from depinlab.errors import ConfigError
from depinlab.obstacles import (
    ObstacleField,
    ObstacleSpec,
    analytic_force_1d,
    build_random_obstacles,
    eval_force,
    eval_force_dy,
    force_antiderivative,
    from_json,
    spline_mean,
    to_json,
    zero_obstacles,
)

landscape = build_random_obstacles(ObstacleSpec(rng_seed=5))


def test_same_seed_same_landscape():
    a = build_random_obstacles(ObstacleSpec(rng_seed=11))
    b = build_random_obstacles(ObstacleSpec(rng_seed=11))
    c = build_random_obstacles(ObstacleSpec(rng_seed=12))
    assert np.array_equal(a.control, b.control)
    assert not np.array_equal(a.control, c.control)


def test_zero_mean_and_extremes():
    assert abs(spline_mean(landscape)) < 1e-15
    lo, hi = landscape.force_bounds()
    xs, ys = np.meshgrid(np.linspace(0, 1, 97), np.linspace(0, 1, 97))
    vals = eval_force(landscape, xs, ys)
    assert lo - 1e-15 <= vals.min() and vals.max() <= hi + 1e-15
    assert hi > 0 > lo


def test_max_force_normalisation_shared_across_sizes():
    for M in (8, 16, 32, 64, 128):
        f = build_random_obstacles(ObstacleSpec(site_size=1 / M, rng_seed=2))
        raw_peak = np.max(np.abs(f.amplitude * f.control))
        assert raw_peak == pytest.approx(0.25, rel=0.2)


def test_site_size_validation():
    with pytest.raises(ConfigError):
        ObstacleSpec(site_size=1 / 7)
    with pytest.raises(ConfigError):
        ObstacleSpec(site_probability=0.0)
    with pytest.raises(ConfigError):
        ObstacleSpec(well_depth=-1.0)


def test_constant_control_reproduces_constant():
    f = ObstacleField("spline2d", 8, np.full((8, 8), 0.3))
    vals = eval_force(f, np.random.default_rng(0).random(50), np.random.default_rng(1).random(50))
    np.testing.assert_allclose(vals, 0.3, atol=1e-15)


def test_well_gives_attracting_dipole():
    # a single site: the force pushes the interface up below the well, down above it
    M = 16
    control = np.zeros((M, M))
    control[8, 7], control[8, 9] = 1.0, -1.0
    f = ObstacleField("spline2d", M, control)
    assert eval_force(f, 8 / M, 7 / M) > 0 > eval_force(f, 8 / M, 9 / M)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(0, 1), y=st.floats(-3, 3), n=st.integers(-3, 3), m=st.integers(-3, 3))
def test_periodic_in_both_directions(x, y, n, m):
    a = eval_force(landscape, x, y)
    b = eval_force(landscape, x + n, y + m)
    assert b == pytest.approx(a, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(0, 1), y=st.floats(-2.5, 2.5))
def test_antiderivative_matches_quadrature(x, y):
    # integrate knot interval by knot interval so quad only sees polynomials
    knots = np.arange(np.floor(min(0, y) * 16), np.ceil(max(0, y) * 16) + 1) / 16
    edges = np.unique(np.clip(np.concatenate([knots, [0.0, y]]), min(0, y), max(0, y)))
    ref = sum(integrate.quad(lambda s: eval_force(landscape, x, s), a, b)[0]
              for a, b in zip(edges[:-1], edges[1:]))
    ref = ref if y >= 0 else -ref
    assert force_antiderivative(landscape, x, y) == pytest.approx(ref, abs=1e-11)


@pytest.mark.parametrize("family", ["cosine", "abs_log", "piecewise_linear"])
def test_analytic_antiderivative_and_derivative(family):
    f = analytic_force_1d(family, amplitude=0.8)
    ys = np.linspace(-1.7, 2.3, 41)
    for y in ys:
        ref, _ = integrate.quad(lambda s: eval_force(f, 0.0, s), 0.0, y, limit=200,
                                points=[k / 4 for k in range(-8, 10)])
        assert force_antiderivative(f, 0.0, y) == pytest.approx(ref, abs=1e-12)
    h = 1e-6
    for y in ys + 0.013:
        fd = (eval_force(f, 0.0, y + h) - eval_force(f, 0.0, y - h)) / (2 * h)
        assert eval_force_dy(f, 0.0, y) == pytest.approx(fd, abs=1e-5)


def test_spline_derivative_matches_finite_difference():
    rng = np.random.default_rng(4)
    x, y = rng.random(30), rng.random(30) * 4 - 2
    h = 1e-6
    fd = (eval_force(landscape, x, y + h) - eval_force(landscape, x, y - h)) / (2 * h)
    np.testing.assert_allclose(eval_force_dy(landscape, x, y), fd, atol=1e-6)


def test_lipschitz_bound_holds():
    _, ly = landscape.lipschitz_constants()
    xs, ys = np.meshgrid(np.linspace(0, 1, 64), np.linspace(0, 1, 257))
    assert np.max(np.abs(eval_force_dy(landscape, xs, ys))) <= ly + 1e-12


def test_analytic_values():
    assert eval_force(analytic_force_1d("cosine", amplitude=1.0), 0.3, 0.0) == 1.0
    assert eval_force(analytic_force_1d("abs_log"), 0.0, 0.5) == -1.0
    assert eval_force(analytic_force_1d("piecewise_linear"), 0.0, 0.5) == -1.0
    assert zero_obstacles().is_zero
    with pytest.raises(ConfigError):
        analytic_force_1d("sawtooth")


def test_json_round_trip_bit_exact():
    back = from_json(to_json(landscape))
    assert np.array_equal(back.control, landscape.control)
    assert back.amplitude == landscape.amplitude
    assert to_json(back) == to_json(landscape)
    cos = analytic_force_1d("cosine", amplitude=0.7)
    assert to_json(from_json(to_json(cos))) == to_json(cos)
