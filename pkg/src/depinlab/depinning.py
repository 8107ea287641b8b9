"""Critical force bisection, velocity sweeps and power-law fits."""
from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InconclusiveRunError, NumericalError, PinnedError
from .evolution import SimConfig, Stepper, classify_force, measure_period, run_until_travel
from .obstacles import ObstacleField

log = logging.getLogger(__name__)

MONOTONE_TOL = 1e-6


@dataclass(frozen=True)
class SweepSpec:
    """Forces ``F* + delta`` with delta log-spaced over ``decades`` decades
    ending at ``delta_max``."""

    delta_max: float = 1e-2
    decades: float = 3.0
    points_per_decade: int = 4
    measure_period: bool = False
    workers: int = 1

    def __post_init__(self):
        if not self.delta_max > 0:
            raise ConfigError("delta_max must be positive")
        if not self.decades > 0:
            raise ConfigError("decades must be positive")
        if self.points_per_decade < 1:
            raise ConfigError("points_per_decade must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def deltas(self) -> np.ndarray:
        n = int(round(self.decades * self.points_per_decade)) + 1
        return self.delta_max * np.logspace(-self.decades, 0.0, n)


@dataclass(frozen=True)
class SweepPoint:
    F: float
    delta: float
    v: float
    T: float | None = None
    defect: float | None = None


@dataclass
class SweepResult:
    points: list
    stuck: list = field(default_factory=list)

    def table(self) -> np.ndarray:
        return np.array([[p.F, p.delta, p.v] for p in self.points])


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r_squared: float
    window: tuple
    n_points: int


@dataclass
class DepinningResult:
    f_star_lower: float
    f_star_upper: float
    sweep: list = field(default_factory=list)
    fit: PowerLawFit | None = None

    @property
    def f_star(self) -> float:
        return 0.5 * (self.f_star_lower + self.f_star_upper)

    def to_dict(self) -> dict:
        return {
            "f_star_lower": self.f_star_lower,
            "f_star_upper": self.f_star_upper,
            "sweep": [dataclasses.asdict(p) for p in self.sweep],
            "fit": None if self.fit is None else dataclasses.asdict(self.fit),
        }


def find_critical_force(cfg: SimConfig, obstacles: ObstacleField, on_probe=None):
    """Bisect on the stuck/traveled classification started from g0 = 0.

    Returns ``(f_lower, f_upper)`` with f_lower classified stuck, f_upper
    classified traveled and ``f_upper - f_lower < cfg.accuracy``.
    """
    stepper = Stepper(obstacles, cfg.N, cfg.c)

    def probe(F):
        try:
            c = classify_force(cfg.with_force(F), obstacles, stepper=stepper)
        except InconclusiveRunError as e:
            raise InconclusiveRunError(f"bisection probe inconclusive at F={F!r}: {e}",
                                       F=F, steps=e.steps) from e
        log.debug("probe F=%.12g -> %s (%s, t=%.4g)", F, c.outcome, c.reason, c.elapsed_time)
        if on_probe is not None:
            on_probe(F, c)
        return c.outcome == "traveled"

    lo, hi = cfg.f_lower, cfg.f_upper
    if probe(lo):
        raise ConfigError(f"initial bracket invalid: interface travels at lower bound F={lo}")
    if not probe(hi):
        raise ConfigError(f"initial bracket invalid: interface sticks at upper bound F={hi}")
    while hi - lo >= cfg.accuracy:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if probe(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def _sweep_job(args):
    cfg, obstacles, F, delta, with_period = args
    c = cfg.with_force(F)
    res = run_until_travel(np.zeros(cfg.N), c, obstacles, polish=False)
    if res.outcome != "traveled":
        return F, delta, None, None, None
    T = defect = None
    if with_period:
        try:
            pm = measure_period(c, obstacles)
            T, defect = pm.T, pm.defect
        except (PinnedError, NumericalError) as e:
            log.warning("period measurement failed at F=%g: %s", F, e)
    return F, delta, res.velocity, T, defect


def _map(jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [_sweep_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_sweep_job, jobs))


def velocity_sweep(cfg: SimConfig, obstacles: ObstacleField, f_star: float,
                   sweep_spec: SweepSpec = SweepSpec()) -> SweepResult:
    """Mean velocity ``averaging_length / elapsed_time`` at F = f_star + delta.

    Runs start from g0 = 0 and are independent, so they may be spread over
    ``sweep_spec.workers`` processes; results are ordered by F either way.
    """
    jobs = [(cfg, obstacles, f_star + d, d, sweep_spec.measure_period)
            for d in sweep_spec.deltas()]
    rows = sorted(_map(jobs, sweep_spec.workers), key=lambda r: r[0])
    points = [SweepPoint(F, d, v, T, D) for F, d, v, T, D in rows if v is not None]
    stuck = [F for F, d, v, T, D in rows if v is None]
    if not points:
        raise PinnedError("every sweep run got stuck; the critical force is wrong")
    for a, b in zip(points, points[1:]):
        if b.v < a.v * (1 - MONOTONE_TOL):
            raise NumericalError(
                f"velocity decreases from F={a.F:.10g} (v={a.v:.6g}) to F={b.F:.10g} "
                f"(v={b.v:.6g}); a run was probably misclassified"
            )
    return SweepResult(points, stuck)


def fit_window(deltas, accuracy: float) -> tuple[float, float]:
    """Default fit range: drop offsets below 10x the bisection accuracy and
    the largest decade."""
    d = np.asarray(deltas, dtype=float)
    return max(10 * accuracy, float(d.min())), float(d.max()) / 10


def sqrt_onset(sweep, exponent: float = 0.5, tol: float = 0.1) -> float:
    """Largest offset below which every local log-log slope stays within
    ``tol`` of ``exponent``.

    Points are read in order of increasing offset. If even the smallest pair
    misses, the smallest offset is returned: the regime is not resolved.
    """
    pts = sorted((p.delta, p.v) if isinstance(p, SweepPoint) else (float(p[0]), float(p[1]))
                 for p in sweep)
    if len(pts) < 2:
        raise ConfigError("onset needs at least two sweep points")
    d, v = np.array(pts).T
    slopes = np.diff(np.log(v)) / np.diff(np.log(d))
    onset = d[0]
    for s, right in zip(slopes, d[1:]):
        if abs(s - exponent) > tol:
            break
        onset = right
    return float(onset)


def fit_power_law(sweep, f_star: float, window: tuple | None = None) -> PowerLawFit:
    """Least-squares line through (log(F - F*), log v).

    ``sweep`` is a sequence of SweepPoint or (F, v) pairs.
    """
    pts = [(p.F, p.v) if isinstance(p, SweepPoint) else (float(p[0]), float(p[1]))
           for p in sweep]
    arr = np.array(pts, dtype=float).reshape(-1, 2)
    delta = arr[:, 0] - f_star
    keep = (delta > 0) & (arr[:, 1] > 0)
    if window is not None:
        keep &= (delta >= window[0] * (1 - 1e-9)) & (delta <= window[1] * (1 + 1e-9))
    delta, v = delta[keep], arr[keep, 1]
    if delta.size < 8:
        raise ConfigError(f"power-law fit needs at least 8 points, got {delta.size}")
    span = math.log10(delta.max() / delta.min())
    if span < 2 - 1e-9:
        raise ConfigError(f"power-law fit needs 2 decades of F - F*, got {span:.2f}")
    x, y = np.log(delta), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(math.exp(intercept)), r2,
                       (float(delta.min()), float(delta.max())), int(delta.size))
