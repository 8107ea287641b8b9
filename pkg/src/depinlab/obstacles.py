"""Heterogeneous pinning forces phi(x, y).

Two kinds of landscapes are supported:

* ``spline2d``: a uniform periodic bicubic B-spline on an M x M control grid
  over the unit cell.  Control values are B-spline coefficients (not nodal
  values), so the spline mean equals the mean of the coefficients.
* ``analytic1d``: x-independent families used as exact oracles.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

RNG_ALGORITHM = "numpy.random.PCG64"
ANALYTIC_FAMILIES = ("zero", "cosine", "abs_log", "piecewise_linear")
SITE_GRIDS = (4, 8, 16, 32, 64, 128, 256)


@dataclass(frozen=True)
class ObstacleSpec:
    """Parameters of a random landscape of pinning sites.

    ``max_force`` rescales the landscape so that the largest coefficient
    magnitude equals it, which keeps the extreme forces equal across site
    sizes.  ``None`` keeps the raw ``well_depth * M`` scaling.
    """

    site_size: float = 1.0 / 16
    site_probability: float = 0.1
    well_depth: float = 1.0
    rng_seed: int = 0
    max_force: float | None = 0.25

    def __post_init__(self):
        M = self.grid_size
        if M not in SITE_GRIDS or abs(M * self.site_size - 1.0) > 1e-12:
            raise ConfigError(
                f"site_size must be 1/M with M in {SITE_GRIDS}, got {self.site_size!r}"
            )
        if not 0.0 < self.site_probability < 1.0:
            raise ConfigError("site_probability must lie in (0, 1)")
        if not self.well_depth > 0:
            raise ConfigError("well_depth must be positive")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")
        if self.max_force is not None and not self.max_force > 0:
            raise ConfigError("max_force must be positive or None")

    @property
    def grid_size(self) -> int:
        return int(round(1.0 / self.site_size)) if self.site_size > 0 else 0


@dataclass(frozen=True, eq=False)
class ObstacleField:
    mode: str
    M: int = 0
    control: np.ndarray | None = None
    amplitude: float = 1.0
    seed: int | None = None
    family: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode == "spline2d":
            c = np.array(self.control, dtype=float, copy=True)
            if c.shape != (self.M, self.M) or self.M < 4:
                raise ConfigError(f"control grid must be M x M with M >= 4, got {c.shape}")
            c.setflags(write=False)
            object.__setattr__(self, "control", c)
        elif self.mode == "analytic1d":
            if self.family not in ANALYTIC_FAMILIES:
                raise ConfigError(f"unknown force family {self.family!r}")
            if self.family == "cosine" and not self.params.get("amplitude", 0) > 0:
                raise ConfigError("cosine family needs a positive amplitude")
        else:
            raise ConfigError(f"unknown obstacle mode {self.mode!r}")

    @property
    def is_zero(self) -> bool:
        if self.mode == "analytic1d":
            return self.family == "zero"
        return self.amplitude == 0 or not np.any(self.control)

    def __call__(self, x, y):
        return eval_force(self, x, y)

    # bounds used for certificates and the threshold argument

    def force_bounds(self) -> tuple[float, float]:
        """Rigorous (lower, upper) bounds of phi over the whole cell."""
        if self.mode == "analytic1d":
            a = self.params.get("amplitude", 0.0)
            return {
                "zero": (0.0, 0.0),
                "cosine": (-a, a),
                "abs_log": (-1.0, 0.0),
                "piecewise_linear": (-1.0, 0.0),
            }[self.family]
        # convex hull property of B-splines
        lo, hi = self.amplitude * self.control.min(), self.amplitude * self.control.max()
        return (min(lo, hi), max(lo, hi))

    def lipschitz_constants(self) -> tuple[float, float]:
        """Bounds on |d phi/dx| and |d phi/dy|."""
        if self.mode == "analytic1d":
            ly = {
                "zero": 0.0,
                "cosine": 2 * math.pi * self.params.get("amplitude", 0.0),
                "abs_log": 2.0,
                "piecewise_linear": 4.0,
            }[self.family]
            return 0.0, ly
        c = abs(self.amplitude) * self.control
        lx = self.M * np.max(np.abs(np.roll(c, -1, axis=0) - c))
        ly = self.M * np.max(np.abs(np.roll(c, -1, axis=1) - c))
        return float(lx), float(ly)


# ---------------------------------------------------------------------------
# uniform cubic B-spline basis on one knot interval, t in [0, 1)


def _basis(t):
    s = 1.0 - t
    return (
        s**3 / 6.0,
        (3 * t**3 - 6 * t**2 + 4) / 6.0,
        (-3 * t**3 + 3 * t**2 + 3 * t + 1) / 6.0,
        t**3 / 6.0,
    )


def _basis_dt(t):
    return (
        -0.5 * (1.0 - t) ** 2,
        1.5 * t**2 - 2 * t,
        -1.5 * t**2 + t + 0.5,
        0.5 * t**2,
    )


def _basis_int(t):
    """Integrals of the four basis pieces from 0 to t."""
    return (
        (1.0 - (1.0 - t) ** 4) / 24.0,
        (0.75 * t**4 - 2 * t**3 + 4 * t) / 6.0,
        (-0.75 * t**4 + t**3 + 1.5 * t**2 + t) / 6.0,
        t**4 / 24.0,
    )


def _locate(u, M):
    q = np.floor(u)
    return q.astype(np.int64), u - q


def column_coefficients(f: ObstacleField, x) -> np.ndarray:
    """Collapse the x-direction: returns d[j, l] with phi(x_j, y) = sum_l d[j, l] B_l(y)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    M = f.M
    i, t = _locate(x * M, M)
    d = np.zeros((x.size, M))
    for a, b in enumerate(_basis(t)):
        d += b[:, None] * f.control[(i - 1 + a) % M]
    return f.amplitude * d


def _spline_eval(f, x, y, basis):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    M = f.M
    ix, tx = _locate(x * M, M)
    iy, ty = _locate(y * M, M)
    bx, by = _basis(tx), basis(ty)
    out = np.zeros(x.shape)
    for a in range(4):
        rows = (ix - 1 + a) % M
        for b in range(4):
            out += bx[a] * by[b] * f.control[rows, (iy - 1 + b) % M]
    return out


def _analytic(family, params, y, what="value"):
    y = np.asarray(y, dtype=float)
    s = y - np.floor(y)
    if family == "zero":
        return np.zeros(np.shape(y))
    if family == "cosine":
        a = params["amplitude"]
        if what == "value":
            return a * np.cos(2 * np.pi * y)
        if what == "dy":
            return -2 * np.pi * a * np.sin(2 * np.pi * y)
        return a * np.sin(2 * np.pi * y) / (2 * np.pi)
    if family == "abs_log":
        if what == "value":
            return 2 * np.abs(s - 0.5) - 1
        if what == "dy":
            return np.where(s < 0.5, -2.0, 2.0)
        partial = np.where(s <= 0.5, -s * s, s * s - 2 * s + 0.5)
        return -0.5 * np.floor(y) + partial
    # piecewise_linear
    if what == "value":
        return np.select([s < 0.25, s < 0.75], [-4 * s, -1.0], -1 + 4 * (s - 0.75))
    if what == "dy":
        return np.select([s < 0.25, s < 0.75], [-4.0, 0.0], 4.0)
    partial = np.select(
        [s < 0.25, s < 0.75],
        [-2 * s * s, -0.125 - (s - 0.25)],
        -0.625 - (s - 0.75) + 2 * (s - 0.75) ** 2,
    )
    return -0.75 * np.floor(y) + partial


def eval_force(f: ObstacleField, x, y):
    """phi(x, y), periodic in both arguments.  Accepts scalars or arrays."""
    if f.mode == "analytic1d":
        out = _analytic(f.family, f.params, np.broadcast_arrays(x, y)[1])
    else:
        out = f.amplitude * _spline_eval(f, x, y, _basis)
    return float(out) if np.ndim(out) == 0 else out


def eval_force_dy(f: ObstacleField, x, y):
    """d phi / dy."""
    if f.mode == "analytic1d":
        out = _analytic(f.family, f.params, np.broadcast_arrays(x, y)[1], "dy")
    else:
        out = f.amplitude * f.M * _spline_eval(f, x, y, _basis_dt)
    return float(out) if np.ndim(out) == 0 else out


def force_antiderivative(f: ObstacleField, x, y):
    """Exact ``int_0^y phi(x, s) ds``.

    The spline is piecewise cubic in y, so the integral is assembled from
    closed-form integrals of the basis over whole knot intervals plus a
    partial interval.
    """
    if f.mode == "analytic1d":
        out = _analytic(f.family, f.params, np.broadcast_arrays(x, y)[1], "int")
        return float(out) if np.ndim(out) == 0 else out
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    x, y = x.ravel(), y.ravel()
    M = f.M
    d = column_coefficients(f, x)
    # cell l spans [l/M, (l+1)/M) and touches coefficients l-1 .. l+2
    cells = (
        np.roll(d, 1, axis=1) + 11 * d + 11 * np.roll(d, -1, axis=1) + np.roll(d, -2, axis=1)
    ) / (24.0 * M)
    prefix = np.concatenate([np.zeros((x.size, 1)), np.cumsum(cells, axis=1)], axis=1)
    total = prefix[:, -1]
    q, t = _locate(y * M, M)
    periods, cell = np.divmod(q, M)
    rows = np.arange(x.size)
    partial = np.zeros(x.size)
    for m, b in enumerate(_basis_int(t)):
        partial += b * d[rows, (cell - 1 + m) % M]
    out = periods * total + prefix[rows, cell] + partial / M
    out = out.reshape(shape)
    return float(out) if np.ndim(out) == 0 else out


def spline_mean(f: ObstacleField) -> float:
    """Exact cell average of phi (each periodic B-spline integrates to 1/M^2)."""
    if f.mode == "analytic1d":
        return {"zero": 0.0, "cosine": 0.0, "abs_log": -0.5, "piecewise_linear": -0.75}[f.family]
    return float(f.amplitude * np.mean(f.control))


def enforce_zero_mean(f: ObstacleField) -> ObstacleField:
    if f.mode != "spline2d":
        if spline_mean(f) != 0.0:
            raise ConfigError(f"family {f.family!r} has a fixed non-zero mean")
        return f
    c = np.array(f.control)
    m = np.mean(c)
    if m == 0.0:
        return f
    return ObstacleField("spline2d", f.M, c - m, f.amplitude, f.seed)


def build_random_obstacles(spec: ObstacleSpec) -> ObstacleField:
    """Random landscape of attractive wells on an M x M cell grid.

    Each selected cell lowers the potential by ``well_depth``; the force is
    minus the centred y-difference of the potential times M, which gives the
    up-then-down dipole of a well.  The cubic B-spline then smooths it.
    """
    M = spec.grid_size
    rng = np.random.Generator(np.random.PCG64(int(spec.rng_seed)))
    sites = rng.random((M, M)) < spec.site_probability
    potential = -spec.well_depth * sites.astype(float)
    control = -M * 0.5 * (np.roll(potential, -1, axis=1) - np.roll(potential, 1, axis=1))
    amplitude = 1.0
    peak = np.max(np.abs(control))
    if spec.max_force is not None and peak > 0:
        amplitude = spec.max_force / peak
    field_ = ObstacleField("spline2d", M, control, amplitude, int(spec.rng_seed))
    return enforce_zero_mean(field_)


def analytic_force_1d(family: str, **params) -> ObstacleField:
    if family not in ANALYTIC_FAMILIES:
        raise ConfigError(f"unknown force family {family!r}")
    if family == "cosine":
        params = {"amplitude": float(params.get("amplitude", 1.0))}
    return ObstacleField("analytic1d", family=family, params=params)


def zero_obstacles() -> ObstacleField:
    return analytic_force_1d("zero")


def to_json(f: ObstacleField) -> str:
    doc = {
        "mode": f.mode,
        "M": f.M,
        "control_values": None if f.control is None else f.control.ravel().tolist(),
        "amplitude": f.amplitude,
        "seed": f.seed,
        "family": f.family,
        "params": f.params,
    }
    return json.dumps(doc, sort_keys=True)


def from_json(text: str) -> ObstacleField:
    doc = json.loads(text)
    control = doc.get("control_values")
    M = doc.get("M", 0)
    if control is not None:
        control = np.asarray(control, dtype=float).reshape(M, M)
    return ObstacleField(
        doc["mode"], M, control, doc.get("amplitude", 1.0), doc.get("seed"),
        doc.get("family"), doc.get("params") or {},
    )
