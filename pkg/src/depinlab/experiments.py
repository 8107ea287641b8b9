"""Command implementations.  Each writes its artifacts below output_dir and
returns a summary dict; every file carries the manifest hash."""
from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from .config import EXPERIMENT2_SIZES, ExperimentManifest
from .depinning import (
    DepinningResult,
    find_critical_force,
    fit_power_law,
    sqrt_onset,
    fit_window,
    velocity_sweep,
)
from .energy import energy_trajectory, extension_energy_check, extension_energy_exact
from .errors import ConfigError
from .evolution import (
    TrajectoryLog,
    evolve_snapshots,
    measure_period,
    run_until_travel,
    write_snapshot,
)
from .obstacles import RNG_ALGORITHM, ObstacleSpec, to_json
from .ode import Force1D, velocity_table


class Writer:
    """Serialises all file output for one manifest."""

    def __init__(self, manifest: ExperimentManifest, subdir: str = ""):
        self.manifest = manifest
        self.root = Path(manifest.output_dir) / subdir
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def _path(self, name):
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(str(p))
        return p

    def header(self) -> str:
        return f"depin-lab {self.manifest.command} manifest={self.manifest.hash}"

    def csv(self, name, columns, rows, units=""):
        with open(self._path(name), "w", newline="") as fh:
            fh.write(f"# {self.header()}\n")
            if units:
                fh.write(f"# units: {units}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def json(self, name, doc):
        doc = dict(doc, manifest_hash=self.manifest.hash, generator=self.header())
        with open(self._path(name), "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")

    def snapshot(self, name, t, F, g):
        write_snapshot(self._path(name), t, F, g, extra_header=self.header())

    def manifest_file(self):
        with open(self._path("manifest.json"), "w") as fh:
            fh.write(self.manifest.to_json() + "\n")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _echo(m: ExperimentManifest) -> dict:
    return {
        "manifest": m.to_dict(),
        "rng_algorithm": RNG_ALGORITHM,
        "rng_seed": getattr(m.obstacle, "rng_seed", None),
    }


def run_simulate(m: ExperimentManifest) -> dict:
    w = Writer(m)
    w.manifest_file()
    f = m.build_obstacles()
    cfg = m.config
    log = TrajectoryLog(every=m.output.trajectory_every)
    res = run_until_travel(np.zeros(cfg.N), cfg, f, log_to=log)
    w.csv("trajectory.csv", ["step", "t", "mean", "seminorm_sq", "residual_l2"], log.rows,
          units="time in model units, lengths in periods of the landscape")
    w.snapshot("snapshots/final.csv", res.elapsed_time, cfg.F, res.final_state)
    summary = {
        "outcome": res.outcome,
        "elapsed_time": res.elapsed_time,
        "mean_displacement": res.mean_displacement,
        "velocity": res.velocity,
        "steps": res.steps,
        "stop_reason": res.reason,
    }
    w.json("result.json", dict(summary, **_echo(m)))
    return summary


def _critical(m, f, w):
    probes = []
    lo, hi = find_critical_force(m.config, f,
                                 on_probe=lambda F, c: probes.append((F, c.outcome, c.reason)))
    w.csv("bisection.csv", ["F", "outcome", "reason"], probes)
    return lo, hi


def run_find_critical(m: ExperimentManifest) -> dict:
    w = Writer(m)
    w.manifest_file()
    f = m.build_obstacles()
    lo, hi = _critical(m, f, w)
    result = DepinningResult(lo, hi)
    w.json("depinning.json", dict(result.to_dict(), **_echo(m)))
    return {"f_star_lower": lo, "f_star_upper": hi}


def _sweep_and_fit(m, f, lo, hi, w):
    sweep = velocity_sweep(m.config, f, hi, m.sweep)
    rows = [(p.F, p.delta, p.v, p.T, p.defect) for p in sweep.points]
    w.csv("sweep.csv", ["F", "F_minus_Fstar", "v_bar", "T", "defect"], rows,
          units="force and velocity in model units")
    fit = None
    try:
        window = fit_window([p.delta for p in sweep.points], m.config.accuracy)
        fit = fit_power_law(sweep.points, hi, window)
    except ConfigError as e:
        w.json("fit_error.json", {"error": str(e)})
    return DepinningResult(lo, hi, sweep.points, fit), sweep.stuck


def run_sweep(m: ExperimentManifest) -> dict:
    w = Writer(m)
    w.manifest_file()
    f = m.build_obstacles()
    if m.output.f_star is not None:
        lo = hi = float(m.output.f_star)
    else:
        lo, hi = _critical(m, f, w)
    result, stuck = _sweep_and_fit(m, f, lo, hi, w)
    w.json("depinning.json", dict(result.to_dict(), stuck_forces=stuck, **_echo(m)))
    return result.to_dict()


def run_ode_oracle(m: ExperimentManifest) -> dict:
    w = Writer(m)
    w.manifest_file()
    force = Force1D(m.ode.family, {"amplitude": m.ode.amplitude})
    rows = velocity_table(force, m.ode.forces, m.ode.dt)
    w.csv("ode.csv", ["F", "v_quadrature", "v_closed_form", "v_euler"],
          [(r["F"], r["v_quadrature"], r["v_closed_form"], r["v_euler"]) for r in rows],
          units="force and velocity in model units")
    return {"rows": rows}


def run_energy_check(m: ExperimentManifest) -> dict:
    w = Writer(m)
    w.manifest_file()
    f = m.build_obstacles()
    cfg = m.config
    rows = energy_trajectory(np.zeros(cfg.N), cfg, f, m.output.energy_steps,
                             every=m.output.trajectory_every)
    w.csv("energy.csv", ["t", "elastic", "potential", "driving", "total", "residual_l2"], rows,
          units="energy per unit length of the interface")
    dE = np.diff(rows[:, 4])
    r2 = rows[:-1, 5] ** 2
    slack = dE - 10 * cfg.dt * m.output.trajectory_every * r2
    g = np.cos(2 * np.pi * np.arange(cfg.N) / cfg.N)
    ext, exact = extension_energy_check(g), extension_energy_exact(g)
    summary = {
        "max_energy_increase_over_tolerance": float(slack.max()) if slack.size else 0.0,
        "lyapunov_ok": bool(slack.size == 0 or slack.max() <= 1e-13),
        "extension_energy_cos": ext,
        "extension_energy_exact_cos": exact,
    }
    w.json("energy_check.json", dict(summary, **_echo(m)))
    return summary


def _experiment_core(m: ExperimentManifest, w: Writer) -> DepinningResult:
    f = m.build_obstacles()
    w.json("landscape.json", json.loads(to_json(f)))
    lo, hi = _critical(m, f, w)
    result, _ = _sweep_and_fit(m, f, lo, hi, w)
    w.json("depinning.json", dict(result.to_dict(), **_echo(m)))
    # one period of the travelling state slightly above threshold
    cfg = m.config.with_force(hi + m.sweep.delta_max)
    pm = measure_period(cfg, f)
    snaps = evolve_snapshots(pm.state, cfg, f, pm.T, m.output.snapshots_per_period)
    for i, (t, g) in enumerate(snaps):
        w.snapshot(f"snapshots/period_{i:03d}.csv", pm.t_start + t, cfg.F, g)
    stuck = run_until_travel(np.zeros(m.config.N), m.config.with_force(lo), f)
    if stuck.outcome == "stuck":
        w.snapshot("snapshots/critical_stuck.csv", stuck.elapsed_time, lo, stuck.final_state)
    return result


def run_experiment1(m: ExperimentManifest) -> dict:
    w = Writer(m)
    w.manifest_file()
    return _experiment_core(m, w).to_dict()


def run_experiment2(m: ExperimentManifest) -> dict:
    if not isinstance(m.obstacle, ObstacleSpec):
        raise ConfigError("experiment2 needs a spline landscape")
    w = Writer(m)
    w.manifest_file()
    table, overlay = [], []
    for size in EXPERIMENT2_SIZES:
        sub = dataclasses.replace(m, obstacle=dataclasses.replace(m.obstacle, site_size=size))
        M = int(round(1 / size))
        res = _experiment_core(sub, Writer(sub, subdir=f"size_1_{M}"))
        table.append((f"1/{M}", res.f_star_lower, res.f_star_upper,
                      sqrt_onset(res.sweep) if len(res.sweep) > 1 else None))
        overlay += [(f"1/{M}", p.F, p.delta, p.v) for p in res.sweep]
    w.csv("critical_forces.csv", ["site_size", "f_star_lower", "f_star_upper", "fit_onset"],
          table, units="force in model units")
    w.csv("sweep_overlay.csv", ["site_size", "F", "F_minus_Fstar", "v_bar"], overlay,
          units="force and velocity in model units")
    return {"sizes": [row[0] for row in table],
            "f_star": [0.5 * (row[1] + row[2]) for row in table]}


RUNNERS = {
    "simulate": run_simulate,
    "find-critical": run_find_critical,
    "sweep": run_sweep,
    "ode-oracle": run_ode_oracle,
    "energy-check": run_energy_check,
    "experiment1": run_experiment1,
    "experiment2": run_experiment2,
}


def run(m: ExperimentManifest) -> dict:
    return RUNNERS[m.command](m)

