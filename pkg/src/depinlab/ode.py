"""The one-dimensional model g' = phi(g) + F.

For a flat interface and an x-independent force the nonlocal equation
reduces to this ODE, so everything here doubles as an exact oracle for the
PDE stepper.  Velocities are ``1/T`` with ``T = int_0^1 dg / (F + phi(g))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import ConfigError, InconclusiveRunError, NumericalError, PinnedError
from .obstacles import ANALYTIC_FAMILIES, ObstacleField, analytic_force_1d, eval_force

_KIND = {
    "zero": _kernels.ZERO,
    "cosine": _kernels.COSINE,
    "abs_log": _kernels.ABS_LOG,
    "piecewise_linear": _kernels.PIECEWISE,
}


@dataclass(frozen=True)
class Force1D:
    """A 1-periodic force phi(g) from one of the analytic families."""

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in ANALYTIC_FAMILIES:
            raise ConfigError(f"unknown force family {self.family!r}")
        if self.family == "cosine":
            a = float(self.params.get("amplitude", 1.0))
            if not a > 0:
                raise ConfigError("cosine amplitude must be positive")
            object.__setattr__(self, "params", {"amplitude": a})

    @classmethod
    def from_obstacle(cls, f: ObstacleField) -> "Force1D":
        if f.mode != "analytic1d":
            raise ConfigError("only x-independent families reduce to the ODE")
        return cls(f.family, dict(f.params))

    def as_obstacle(self) -> ObstacleField:
        return analytic_force_1d(self.family, **self.params)

    def __call__(self, g):
        return eval_force(self.as_obstacle(), 0.0, g)

    @property
    def minimum(self) -> float:
        return self.as_obstacle().force_bounds()[0]

    @property
    def critical_force(self) -> float:
        return -self.minimum

    @property
    def breakpoints(self) -> list[float]:
        """Kinks and the minimiser; quadrature splits the period here."""
        return {
            "zero": [],
            "cosine": [0.5],
            "abs_log": [0.5],
            "piecewise_linear": [0.25, 0.75],
        }[self.family]

    def _kernel_args(self):
        params = np.array([self.params.get("amplitude", 0.0)])
        return _KIND[self.family], params


def period_integral(f: Force1D, F: float, rtol: float = 1e-10) -> float:
    """Time to advance by one period, by adaptive quadrature.

    Raises PinnedError when ``F + phi`` vanishes somewhere in the period.
    """
    if F <= f.critical_force:
        raise PinnedError(f"F={F} does not exceed the critical force {f.critical_force}")
    if f.family == "zero":
        return 1.0 / F
    pts = [0.0] + f.breakpoints + [1.0]
    total, err = 0.0, 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        # split each piece again at its midpoint so the peak sits at an end
        for lo, hi in ((a, 0.5 * (a + b)), (0.5 * (a + b), b)):
            val, e = integrate.quad(
                lambda g: 1.0 / (F + f(g)), lo, hi, epsabs=0.0, epsrel=rtol * 1e-2, limit=500
            )
            total += val
            err += e
    if not err <= rtol * total:
        raise NumericalError(f"period quadrature did not converge (err={err:.3g}, T={total:.6g})")
    return total


def closed_form_velocity(family: str, F: float, amplitude: float = 1.0) -> float:
    """Exact mean velocity for the analytic families.

    Written in terms of ``d = F - 1`` with log1p so the formulas stay
    accurate right above the threshold.
    """
    if family == "zero":
        return float(F)
    if family == "cosine":
        if F <= amplitude:
            raise PinnedError(f"F={F} <= critical force {amplitude}")
        return math.sqrt((F - amplitude) * (F + amplitude))
    if family not in ("abs_log", "piecewise_linear"):
        raise ConfigError(f"no closed form for family {family!r}")
    if F <= 1.0:
        raise PinnedError(f"F={F} <= critical force 1")
    d = F - 1.0
    log_ratio = math.log1p(d) - math.log(d)  # log F - log(F - 1)
    if family == "abs_log":
        return 1.0 / log_ratio
    # 2(F-1) / (1 - log F + F log F + log(F-1) - F log(F-1))
    return 2.0 * d / (1.0 + d * log_ratio)


def ode_timestep_velocity(f: Force1D, F: float, dt: float, max_steps: int = 10**9) -> float:
    """Mean velocity from explicit Euler over one period with an
    interpolated crossing time."""
    if not dt > 0:
        raise ConfigError("dt must be positive")
    kind, params = f._kernel_args()
    T = _kernels.ode_crossing_time(kind, params, float(F), float(dt), int(max_steps), 1e-14)
    if T == -1.0:
        raise PinnedError(f"ODE got stuck at F={F}")
    if T == -2.0:
        raise InconclusiveRunError(f"ODE did not cross one period at F={F}", F=F, steps=max_steps)
    return 1.0 / T


def velocity_table(f: Force1D, forces, dt: float) -> list[dict]:
    """Rows of (F, quadrature, closed form, Euler) velocities."""
    rows = []
    for F in forces:
        try:
            v_quad = 1.0 / period_integral(f, F)
        except PinnedError:
            rows.append({"F": F, "v_quadrature": 0.0, "v_closed_form": 0.0, "v_euler": 0.0})
            continue
        v_closed = closed_form_velocity(f.family, F, f.params.get("amplitude", 1.0))
        rows.append({
            "F": F,
            "v_quadrature": v_quad,
            "v_closed_form": v_closed,
            "v_euler": ode_timestep_velocity(f, F, dt),
        })
    return rows
