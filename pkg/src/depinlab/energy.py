"""Tilted energy of the interface, stationary states and the extension check."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .evolution import SimConfig, Stepper, _l2, run_until_travel
from .obstacles import ObstacleField, force_antiderivative
from .spectral import GridField, _values, forward_transform, h_half_seminorm_sq


@dataclass(frozen=True)
class EnergyBreakdown:
    elastic: float
    potential: float
    driving: float
    total: float


def total_energy(g, obstacles: ObstacleField, F: float, c: float) -> EnergyBreakdown:
    """E(g) = c/2 [g]^2 - mean_x int_0^{g(x)} phi(x, s) ds - F mean(g).

    Its L2 gradient (inner product ``mean(u v)``) is ``-rhs(g)``.
    """
    v = _values(g)
    x = np.arange(v.size) / v.size
    elastic = 0.5 * c * h_half_seminorm_sq(forward_transform(v))
    potential = -float(np.mean(force_antiderivative(obstacles, x, v)))
    driving = -F * float(np.mean(v))
    return EnergyBreakdown(elastic, potential, driving, elastic + potential + driving)


def residual(g, obstacles: ObstacleField, F: float, c: float) -> GridField:
    """Defect of the stationary equation, identical to the evolution RHS."""
    v = _values(g)
    return GridField(Stepper(obstacles, v.size, c).rhs(v, F))


def find_stationary(cfg: SimConfig, obstacles: ObstacleField, F: float) -> GridField | None:
    """Run the gradient flow from g = 0 and return the state it sticks in.

    Returns None when the interface travels ``averaging_length`` instead.
    """
    res = run_until_travel(np.zeros(cfg.N), cfg.with_force(F), obstacles)
    if res.outcome == "traveled":
        return None
    return res.final_state


def energy_trajectory(g0, cfg: SimConfig, obstacles: ObstacleField, n_steps: int,
                      every: int = 1) -> np.ndarray:
    """Rows (t, elastic, potential, driving, total, residual_l2) along Euler steps."""
    st = Stepper(obstacles, cfg.N, cfg.c)
    g = np.array(_values(g0), dtype=float)
    rows = []
    for n in range(n_steps + 1):
        r = st.rhs(g, cfg.F)
        if n % every == 0:
            e = total_energy(g, obstacles, cfg.F, cfg.c)
            rows.append((n * cfg.dt, e.elastic, e.potential, e.driving, e.total, _l2(r)))
        g = g + cfg.dt * r
    return np.array(rows)


def _panel_rule(y_cutoff: float, n_quad: int, y_first: float):
    """Composite Gauss-Legendre on geometrically growing panels of [0, y_cutoff]."""
    order = 16
    n_panels = max(n_quad // order, 2)
    edges = np.concatenate([[0.0], np.geomspace(min(y_first, y_cutoff / 2), y_cutoff,
                                                n_panels)])
    t, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * t + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def extension_energy_check(g, c: float = 1.0, y_cutoff: float = 20.0, n_quad: int = 512,
                           tol: float = 1e-10) -> float:
    """Dirichlet energy of the harmonic extension of the jump g, split as +-g/2.

    With theta = 2 pi x, each Fourier mode k extends to the half-strips as
    ``(ghat(k)/2) exp(-|k| y) exp(i k theta)``, which is harmonic in
    (theta, y).  The energy ``c * int int 1/2 |grad u|^2`` (theta averaged,
    both half-strips) is integrated numerically in y on [0, y_cutoff].  Its
    exact value is ``c/2`` times the one-sided seminorm.
    """
    v = _values(g)
    s = forward_transform(v)
    k = np.abs(s.wavenumbers)
    a2 = np.abs(s.coeffs) ** 2 / 4.0
    live = (k > 0) & (a2 > 0)
    if not np.any(live):
        return 0.0
    k, a2 = k[live], a2[live]
    kmax = k.max()
    tail = float(np.sum(k * a2 * np.exp(-2 * k * y_cutoff)))
    scale = float(np.sum(k * a2))
    if tail > tol * scale:
        raise ConfigError(
            f"y_cutoff={y_cutoff} too small: truncated tail is {tail / scale:.2e} relative"
        )
    y, w = _panel_rule(y_cutoff, n_quad, 0.05 / kmax)
    # theta average of 1/2 |grad u|^2 is sum_k k^2 |a_k|^2 e^{-2|k|y} (both +-k listed)
    density = (k[None, :] ** 2 * a2[None, :] * np.exp(-2 * k[None, :] * y[:, None])).sum(axis=1)
    return c * 2.0 * float(np.dot(w, density))


def extension_energy_exact(g, c: float = 1.0) -> float:
    """Closed form of the same energy: c/2 times the one-sided seminorm."""
    return 0.5 * c * h_half_seminorm_sq(forward_transform(_values(g)), one_sided=True)

