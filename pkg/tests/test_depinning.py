import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depinlab.depinning import (
    SweepPoint,
    SweepSpec,
    find_critical_force,
    fit_power_law,
    fit_window,
    sqrt_onset,
    velocity_sweep,
)
from depinlab.errors import ConfigError, InconclusiveRunError
from depinlab.evolution import SimConfig
from depinlab.obstacles import ObstacleSpec, analytic_force_1d, build_random_obstacles, zero_obstacles
from depinlab.ode import closed_form_velocity

ZERO = zero_obstacles()
COS = analytic_force_1d("cosine", amplitude=1.0)


def test_free_interface_threshold_is_zero():
    lo, hi = find_critical_force(SimConfig(N=16), ZERO)
    assert lo == 0.0
    assert 0 < hi < 2e-9


def test_cosine_threshold_is_amplitude():
    cfg = SimConfig(N=8, f_upper=1.5, accuracy=1e-6)
    lo, hi = find_critical_force(cfg, COS)
    assert hi - lo < 1e-6
    assert lo <= 1.0 + 1e-6 and hi >= 1.0 - 1e-6


def test_bad_bracket_rejected():
    with pytest.raises(ConfigError):
        find_critical_force(SimConfig(N=8, f_upper=0.5), COS)
    with pytest.raises(ConfigError):
        find_critical_force(SimConfig(N=8, f_lower=1.2, f_upper=1.5), COS)


def test_inconclusive_probe_names_force():
    cfg = SimConfig(N=8, f_upper=1.5, max_steps=500, chunk_steps=100, newton_polish=False)
    with pytest.raises(InconclusiveRunError) as info:
        find_critical_force(cfg, COS)
    assert info.value.F is not None


def test_landscape_threshold_positive_and_bracket_invariant():
    f = build_random_obstacles(ObstacleSpec(rng_seed=3))
    cfg = SimConfig(N=64, dt=0.01, accuracy=1e-6)
    probes = []
    lo, hi = find_critical_force(cfg, f, on_probe=lambda F, c: probes.append((F, c.outcome)))
    assert hi - lo < 1e-6
    assert 0 < lo < f.force_bounds()[1]
    stuck = [F for F, o in probes if o == "stuck"]
    moved = [F for F, o in probes if o == "traveled"]
    assert max(stuck) == lo and min(moved) == hi


def test_threshold_does_not_depend_on_step():
    # stationary states are zeros of the RHS whatever dt is
    f = build_random_obstacles(ObstacleSpec(rng_seed=3))
    a = find_critical_force(SimConfig(N=64, dt=0.01, accuracy=1e-5), f)
    b = find_critical_force(SimConfig(N=64, dt=0.002, accuracy=1e-5), f)
    assert abs(0.5 * (a[0] + a[1]) - 0.5 * (b[0] + b[1])) < 1e-5


def test_free_sweep_velocity_equals_force():
    res = velocity_sweep(SimConfig(N=16), ZERO, 0.0,
                         SweepSpec(delta_max=1.0, decades=1, points_per_decade=2))
    for p in res.points:
        assert p.v == pytest.approx(p.F, rel=1e-6)


def test_cosine_sweep_matches_closed_form():
    spec = SweepSpec(delta_max=0.5, decades=2, points_per_decade=2)
    res = velocity_sweep(SimConfig(N=8, dt=1e-4), COS, 1.0, spec)
    for p in res.points:
        assert p.v == pytest.approx(closed_form_velocity("cosine", p.F), rel=1e-2)


def test_sweep_with_workers_is_identical():
    spec = SweepSpec(delta_max=0.5, decades=1, points_per_decade=2, measure_period=True)
    a = velocity_sweep(SimConfig(N=8, dt=1e-3), COS, 1.0, spec)
    b = velocity_sweep(SimConfig(N=8, dt=1e-3), COS, 1.0,
                       SweepSpec(delta_max=0.5, decades=1, points_per_decade=2,
                                 measure_period=True, workers=2))
    assert a.points == b.points
    assert all(p.T is not None and p.defect < 1e-6 for p in a.points)


def test_synthetic_power_law_fit():
    F_star = 0.02
    deltas = np.logspace(-6, -2, 12)
    pts = [SweepPoint(F_star + d, d, 3.0 * math.sqrt(d)) for d in deltas]
    fit = fit_power_law(pts, F_star)
    assert fit.exponent == pytest.approx(0.5, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_fit_needs_points_and_decades():
    pts = [(1 + d, math.sqrt(d)) for d in np.logspace(-3, -2, 10)]
    with pytest.raises(ConfigError):
        fit_power_law(pts, 1.0)
    with pytest.raises(ConfigError):
        fit_power_law(pts[:5], 1.0)


def test_fit_window_drops_top_decade_and_unresolved_offsets():
    lo, hi = fit_window(np.logspace(-9, -3, 7), 2e-9)
    assert lo == pytest.approx(2e-8) and hi == pytest.approx(1e-4)


def test_cosine_closed_form_gives_square_root():
    d = np.logspace(-4, -2, 9)
    pts = [(1 + x, closed_form_velocity("cosine", 1 + x)) for x in d]
    fit = fit_power_law(pts, 1.0)
    assert 0.48 <= fit.exponent <= 0.52
    assert fit.prefactor == pytest.approx(math.sqrt(2), rel=0.05)


def test_abs_log_is_not_a_power_law():
    # negative control: the exponent drifts with the window
    def fit_on(a, b):
        d = np.logspace(a, b, 9)
        return fit_power_law([(1 + x, closed_form_velocity("abs_log", 1 + x)) for x in d], 1.0)

    low, high = fit_on(-8, -6), fit_on(-4, -2)
    assert abs(low.exponent - high.exponent) > 0.02
    assert not 0.45 < low.exponent < 0.55


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.1, 10), p=st.floats(0.2, 1.5), fs=st.floats(0, 1))
def test_fit_recovers_exact_power_laws(a, p, fs):
    d = np.logspace(-5, -2, 10)
    fit = fit_power_law([(fs + x, a * x**p) for x in d], fs)
    assert fit.exponent == pytest.approx(p, abs=1e-6)
    assert fit.prefactor == pytest.approx(a, rel=1e-4)


def test_sqrt_onset_finds_crossover():
    d = np.logspace(-7, -2, 11)
    # square root below 1e-4, a flatter law above
    v = np.where(d <= 1e-4, np.sqrt(d), 1e-2 * (d / 1e-4) ** 0.2)
    pts = [SweepPoint(1 + x, x, y) for x, y in zip(d, v)]
    assert sqrt_onset(pts) == pytest.approx(1e-4)
    assert sqrt_onset([(x, x**0.5) for x in d]) == pytest.approx(1e-2)
    assert sqrt_onset([(x, x**0.1) for x in d]) == pytest.approx(1e-7)
