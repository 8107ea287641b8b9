"""Explicit Euler integration of g_t = -c (-Delta)^{1/2} g + phi(x, g) + F.

The heavy lifting happens in compiled kernels that advance the state in
chunks; between chunks this module handles logging, certificates and the
Newton polish of nearly stationary states.

Classification shortcuts rely on the scheme being monotone.  The discrete
half-Laplacian has non-positive off-diagonal entries, so one Euler step is
an order-preserving map whenever ``dt * (c * A_jj + max |d phi/dy|) <= 1``
with ``A_jj = N/4``.  Under that condition the discrete comparison principle
is exact and the certificates below are rigorous for the discrete problem.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .errors import ConfigError, InconclusiveRunError, NumericalError, PinnedError
from .obstacles import ObstacleField, column_coefficients, eval_force_dy
from .spectral import (
    GridField,
    _is_pow2,
    _values,
    forward_transform,
    h_half_seminorm_sq,
    half_laplacian_matrix,
    wavenumbers,
)

log = logging.getLogger(__name__)

_KIND = {
    "zero": _kernels.ZERO,
    "cosine": _kernels.COSINE,
    "abs_log": _kernels.ABS_LOG,
    "piecewise_linear": _kernels.PIECEWISE,
}


@dataclass(frozen=True)
class SimConfig:
    """Numerical parameters.  Defaults follow the reference parameter table."""

    N: int = 1024
    dt: float = 1e-3
    c: float = 0.1
    F: float = 0.0
    averaging_length: float = 4.0
    stuck_threshold: float = 1e-14
    max_steps: int = 10**8
    # bisection
    f_lower: float = 0.0
    f_upper: float = 0.5
    accuracy: float = 2e-9
    # artifact knobs
    newton_polish: bool = True
    chunk_steps: int = 4096
    period_tolerance: float = 1e-6
    max_periods: int = 20

    def __post_init__(self):
        if not (isinstance(self.N, int) and self.N >= 4 and _is_pow2(self.N)):
            raise ConfigError(f"N must be a power of two >= 4, got {self.N!r}")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.c > 0:
            raise ConfigError("c must be positive")
        if not self.dt * self.c * (self.N / 2) < 2:
            raise ConfigError(
                f"explicit Euler unstable: dt*c*N/2 = {self.dt * self.c * self.N / 2:.3g} >= 2"
            )
        if not self.F >= 0:
            raise ConfigError("F must be non-negative")
        if not self.averaging_length >= 1:
            raise ConfigError("averaging_length must be at least 1")
        if not self.stuck_threshold > 0:
            raise ConfigError("stuck_threshold must be positive")
        if not self.max_steps > 0:
            raise ConfigError("max_steps must be positive")
        if not 0 <= self.f_lower < self.f_upper:
            raise ConfigError("bisection bracket needs 0 <= f_lower < f_upper")
        if not self.accuracy > 0:
            raise ConfigError("accuracy must be positive")
        if not self.chunk_steps > 0:
            raise ConfigError("chunk_steps must be positive")

    def with_force(self, F: float) -> "SimConfig":
        return dataclasses.replace(self, F=float(F))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class TravelResult:
    outcome: str  # "traveled" | "stuck"
    elapsed_time: float
    final_state: GridField
    mean_displacement: float
    period_T: float | None = None
    steps: int = 0
    reason: str = ""
    length: float = 0.0  # requested travel distance

    @property
    def velocity(self) -> float:
        """``length / elapsed_time``, both measured at the interpolated crossing."""
        if self.outcome != "traveled" or self.elapsed_time <= 0:
            return 0.0
        return self.length / self.elapsed_time


class PeriodMeasurement(NamedTuple):
    T: float
    defect: float
    t_start: float
    state: GridField


@dataclass
class TrajectoryLog:
    """Rows of (step, t, mean, seminorm_sq, residual_l2), one per chunk."""

    every: int = 1
    rows: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    snapshot_every: float | None = None
    _next_snapshot: float = 0.0

    def record(self, step, t, g, residual):
        if len(self.rows) % self.every == 0:
            sn = h_half_seminorm_sq(forward_transform(g))
            self.rows.append((step, t, float(np.mean(g)), sn, residual))
        if self.snapshot_every is not None and t >= self._next_snapshot:
            self.snapshots.append((t, g.copy()))
            self._next_snapshot = t + self.snapshot_every


class Stepper:
    """Precomputed tables and scratch buffers for one (N, c, landscape)."""

    def __init__(self, obstacles: ObstacleField, N: int, c: float):
        self.obstacles = obstacles
        self.N, self.c = N, c
        self.x = np.arange(N) / N
        self.rev, self.tw = _kernels.fft_tables(N)
        self.mult = (-c * np.abs(wavenumbers(N)) / N)[: N // 2 + 1].astype(complex)
        self.params = np.array([obstacles.params.get("amplitude", 0.0)])
        if obstacles.mode == "spline2d" and not obstacles.is_zero:
            d = column_coefficients(obstacles, self.x)
            self.kind = _kernels.SPLINE
            self.coef = np.ascontiguousarray(np.concatenate([d[:, -1:], d, d[:, :2]], axis=1))
            self.column_min = d.min(axis=1)
        else:
            family = obstacles.family if obstacles.mode == "analytic1d" else "zero"
            self.kind = _KIND[family]
            self.coef = np.zeros((1, 4))
            self.column_min = np.full(N, obstacles.force_bounds()[0])
        self.lipschitz_y = obstacles.lipschitz_constants()[1]
        self._r = np.zeros(N)
        self._cbuf = np.zeros(N // 2 + 1, dtype=complex)
        self._matrix = None

    def monotone(self, dt: float) -> bool:
        return dt <= self.monotone_dt

    @property
    def monotone_dt(self) -> float:
        """Largest dt for which one Euler step preserves pointwise order."""
        return 1.0 / (self.c * self.N / 4 + self.lipschitz_y)

    def rhs(self, g: np.ndarray, F: float) -> np.ndarray:
        out = np.empty(self.N)
        _kernels.rhs_into(np.ascontiguousarray(g, dtype=float), out, self._cbuf, self.mult,
                          self.rev, self.tw, self.kind, self.coef, self.params, float(F))
        return out

    def elastic(self, g: np.ndarray) -> np.ndarray:
        out = np.empty(self.N)
        _kernels.elastic_into(np.ascontiguousarray(g, dtype=float), out, self._cbuf,
                              self.mult, self.rev, self.tw)
        return out

    def advance(self, g, g_prev, F, dt, n, target, stuck_tol):
        return _kernels.advance(g, g_prev, self._r, self._cbuf, self.mult, self.rev, self.tw,
                                self.kind, self.coef, self.params, float(F), float(dt),
                                int(n), float(target), float(stuck_tol))

    def jacobian(self, g: np.ndarray) -> np.ndarray:
        if self._matrix is None:
            self._matrix = self.c * half_laplacian_matrix(self.N)
        J = -self._matrix.copy()
        J[np.diag_indices(self.N)] += eval_force_dy(self.obstacles, self.x, g)
        return J

    def front_bound(self, g: np.ndarray, F: float) -> float:
        """Lower bound of the RHS over all vertical shifts of g."""
        return float(np.min(self.elastic(g) + self.column_min)) + F


def _l2(v) -> float:
    return math.sqrt(float(np.mean(v * v)))


def newton_stationary(stepper: Stepper, g: np.ndarray, F: float, tol: float,
                      max_iter: int = 16) -> np.ndarray | None:
    """Polish a nearly stationary state with damped Newton.

    Returns a state whose RHS norm is below ``tol`` or None.  Any stationary
    state certifies F <= F*, so convergence to a different root is fine.
    """
    x = np.array(g, dtype=float)
    r = stepper.rhs(x, F)
    nr = _l2(r)
    for _ in range(max_iter):
        if nr < tol:
            return x
        try:
            dx = np.linalg.solve(stepper.jacobian(x), -r)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(dx)):
            return None
        lam = 1.0
        for _ in range(8):
            trial = x + lam * dx
            rt = stepper.rhs(trial, F)
            nt = _l2(rt)
            if nt < nr:
                break
            lam *= 0.5
        else:
            return None
        x, r, nr = trial, rt, nt
    return x if nr < tol else None


class _Run:
    """Shared chunked loop used by every driver in this module."""

    def __init__(self, cfg: SimConfig, obstacles: ObstacleField, g0,
                 stepper: Stepper | None = None, log_to: TrajectoryLog | None = None):
        self.cfg = cfg
        self.stepper = stepper or Stepper(obstacles, cfg.N, cfg.c)
        g0 = _values(g0)
        if g0.size != cfg.N:
            raise ConfigError(f"initial state has {g0.size} points, config says N={cfg.N}")
        self.g = np.array(g0, dtype=float)
        self.g_prev = np.empty_like(self.g)
        self.steps = 0
        self.t0 = 0.0
        self.log = log_to
        self.residual = math.inf

    @property
    def t(self) -> float:
        return self.t0 + self.steps * self.cfg.dt

    def until(self, target: float, *, polish: bool = False, certify: Callable | None = None):
        """Advance until the mean reaches ``target``.

        Returns ("crossed", theta) with the crossing inside the last step at
        fraction theta, ("stuck", reason) or ("certified", reason).
        """
        cfg, st = self.cfg, self.stepper
        newton_at = 1e-3
        if certify is not None and (reason := certify(self.g)):
            return "certified", reason
        while True:
            budget = cfg.max_steps - self.steps
            if budget <= 0:
                raise InconclusiveRunError(
                    f"no decision after {self.steps} steps at F={cfg.F}", F=cfg.F, steps=self.steps
                )
            n = min(cfg.chunk_steps, budget)
            event, k, res = st.advance(self.g, self.g_prev, cfg.F, cfg.dt, n, target,
                                       cfg.stuck_threshold)
            self.steps += k
            self.residual = res
            if event == _kernels.BLOWUP:
                raise NumericalError(f"state became non-finite at t={self.t:.6g} (F={cfg.F})")
            if event == _kernels.CROSSED:
                m0, m1 = float(np.mean(self.g_prev)), float(np.mean(self.g))
                theta = 1.0 if m1 == m0 else min(max((target - m0) / (m1 - m0), 0.0), 1.0)
                if self.log is not None:
                    self.log.record(self.steps, self.t, self.g, res)
                return "crossed", theta
            if event == _kernels.STUCK:
                return "stuck", "residual"
            if self.log is not None:
                self.log.record(self.steps, self.t, self.g, res)
            if certify is not None and (reason := certify(self.g)):
                return "certified", reason
            if polish and res < newton_at:
                newton_at = res / 4
                s = newton_stationary(st, self.g, cfg.F, cfg.stuck_threshold)
                if s is not None:
                    self.g[:] = s
                    self.residual = _l2(st.rhs(s, cfg.F))
                    return "stuck", "newton"

    def crossing_state(self, theta: float) -> tuple[float, np.ndarray]:
        t = self.t - (1.0 - theta) * self.cfg.dt
        return t, self.g_prev + theta * (self.g - self.g_prev)


def rhs(g, obstacles: ObstacleField, F: float, c: float) -> GridField:
    v = _values(g)
    return GridField(Stepper(obstacles, v.size, c).rhs(v, F))


def step(g, cfg: SimConfig, obstacles: ObstacleField) -> GridField:
    v = _values(g)
    out = v + cfg.dt * Stepper(obstacles, v.size, cfg.c).rhs(v, cfg.F)
    if not np.all(np.isfinite(out)):
        raise NumericalError("Euler step produced non-finite values")
    return GridField(out)


def detect_stuck(g, cfg: SimConfig, obstacles: ObstacleField) -> bool:
    v = _values(g)
    return _l2(Stepper(obstacles, v.size, cfg.c).rhs(v, cfg.F)) < cfg.stuck_threshold


def run_until_travel(g0, cfg: SimConfig, obstacles: ObstacleField, length: float | None = None,
                     log_to: TrajectoryLog | None = None, stepper: Stepper | None = None,
                     polish: bool | None = None) -> TravelResult:
    """Step until the mean has advanced by ``length`` or the interface sticks.

    The travel time is linearly interpolated inside the final step.
    """
    L = cfg.averaging_length if length is None else float(length)
    if L < 0:
        raise ConfigError("travel length must be non-negative")
    run = _Run(cfg, obstacles, g0, stepper, log_to)
    m0 = float(np.mean(run.g))
    if L == 0:
        return TravelResult("traveled", 0.0, GridField(run.g), 0.0, reason="mean", length=0.0)
    polish = cfg.newton_polish if polish is None else polish
    status, info = run.until(m0 + L, polish=polish)
    if status == "crossed":
        t_cross, _ = run.crossing_state(info)
        return TravelResult("traveled", t_cross, GridField(run.g), float(np.mean(run.g)) - m0,
                            steps=run.steps, reason="mean", length=L)
    return TravelResult("stuck", run.t, GridField(run.g), float(np.mean(run.g)) - m0,
                        steps=run.steps, reason=info, length=L)


@dataclass
class Classification:
    outcome: str  # "traveled" | "stuck"
    reason: str
    elapsed_time: float
    state: GridField
    steps: int


def classify_force(cfg: SimConfig, obstacles: ObstacleField, g0=None,
                   stepper: Stepper | None = None) -> Classification:
    """Decide whether the interface started at g0 (default flat zero) depins.

    Besides the plain criteria (mean advanced by ``averaging_length`` or RHS
    norm below threshold) three shortcuts are used:

    * front bound: every vertical shift of the current state has a strictly
      positive RHS, so a rigid translation is a subsolution;
    * period shift: the state lies entirely above ``g0 + 1``, so by integer
      shift invariance it keeps advancing by at least 1 per lap;
    * Newton: a stationary state exists at this F.

    The first two need the monotone-scheme condition and are skipped
    otherwise.
    """
    stepper = stepper or Stepper(obstacles, cfg.N, cfg.c)
    g0 = np.zeros(cfg.N) if g0 is None else np.array(_values(g0), dtype=float)
    run = _Run(cfg, obstacles, g0, stepper)
    certify = None
    if stepper.monotone(cfg.dt):
        def certify(g):
            if stepper.front_bound(g, cfg.F) > 1e-12:
                return "front_bound"
            if float(np.min(g - g0)) >= 1.0:
                return "period_shift"
            return ""
    m0 = float(np.mean(g0))
    status, info = run.until(m0 + cfg.averaging_length, polish=cfg.newton_polish,
                             certify=certify)
    if status == "crossed":
        t, _ = run.crossing_state(info)
        return Classification("traveled", "mean", t, GridField(run.g), run.steps)
    if status == "certified":
        return Classification("traveled", info, run.t, GridField(run.g), run.steps)
    return Classification("stuck", info, run.t, GridField(run.g), run.steps)


def measure_period(cfg: SimConfig, obstacles: ObstacleField, g0=None,
                   stepper: Stepper | None = None,
                   log_to: TrajectoryLog | None = None) -> PeriodMeasurement:
    """Time for the mean to advance by exactly one after a transient.

    The first ``averaging_length`` of travel is discarded.  The state is
    then recorded each time the mean crosses an integer, and the period is
    accepted once ``sup |g(t_b) - g(t_a) - 1|`` falls below
    ``cfg.period_tolerance``.
    """
    g0 = np.zeros(cfg.N) if g0 is None else _values(g0)
    run = _Run(cfg, obstacles, g0, stepper, log_to)
    m0 = float(np.mean(run.g))
    status, info = run.until(m0 + cfg.averaging_length)
    if status != "crossed":
        raise PinnedError(f"interface got stuck during the transient at F={cfg.F}")
    level = math.floor(float(np.mean(run.g))) + 1
    status, info = run.until(level)
    if status != "crossed":
        raise PinnedError(f"interface got stuck at F={cfg.F}")
    t_a, g_a = run.crossing_state(info)
    defect = math.inf
    for _ in range(cfg.max_periods):
        level += 1
        status, info = run.until(level)
        if status != "crossed":
            raise PinnedError(f"interface got stuck at F={cfg.F}")
        t_b, g_b = run.crossing_state(info)
        defect = float(np.max(np.abs(g_b - g_a - 1.0)))
        if defect < cfg.period_tolerance:
            return PeriodMeasurement(t_b - t_a, defect, t_a, GridField(g_a))
        t_a, g_a = t_b, g_b
    raise NumericalError(
        f"no periodic orbit within {cfg.max_periods} periods (defect {defect:.3g})"
    )


def evolve_snapshots(g0, cfg: SimConfig, obstacles: ObstacleField, duration: float,
                     n_snapshots: int) -> list[tuple[float, GridField]]:
    """States at ``n_snapshots + 1`` equally spaced times in [0, duration].

    Spacing is rounded to a whole number of steps.
    """
    if n_snapshots < 1 or duration < 0:
        raise ConfigError("need at least one snapshot interval and a non-negative duration")
    run = _Run(cfg, obstacles, g0)
    per = max(int(round(duration / n_snapshots / cfg.dt)), 1)
    out = [(0.0, GridField(run.g))]
    for _ in range(n_snapshots):
        left = per
        while left > 0:
            n = min(left, cfg.chunk_steps)
            event, k, _ = run.stepper.advance(run.g, run.g_prev, cfg.F, cfg.dt, n, math.inf, 0.0)
            if event == _kernels.BLOWUP:
                raise NumericalError(f"state became non-finite at t={run.t:.6g}")
            run.steps += k
            left -= k
        out.append((run.t, GridField(run.g)))
    return out


def write_snapshot(path, t: float, F: float, g, extra_header: str = "") -> None:
    """One value per line under a ``# t=<time> F=<F> N=<N>`` header."""
    v = _values(g)
    with open(path, "w") as fh:
        fh.write(f"# t={t!r} F={F!r} N={v.size}\n")
        if extra_header:
            fh.write(f"# {extra_header}\n")
        for val in v:
            fh.write(f"{float(val)!r}\n")


def read_snapshot(path) -> tuple[float, float, GridField]:
    with open(path) as fh:
        head = fh.readline().lstrip("#").split()
        meta = dict(item.split("=", 1) for item in head)
        vals = [float(line) for line in fh if line.strip() and not line.startswith("#")]
    if len(vals) != int(meta["N"]):
        raise ConfigError(f"snapshot {path} holds {len(vals)} values, header says {meta['N']}")
    return float(meta["t"]), float(meta["F"]), GridField(np.array(vals))
