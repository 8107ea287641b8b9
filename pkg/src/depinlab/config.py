"""Experiment manifests: JSON configs, flag overrides and hashing."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .depinning import SweepSpec
from .errors import ConfigError
from .evolution import SimConfig
from .obstacles import (
    ANALYTIC_FAMILIES,
    ObstacleField,
    ObstacleSpec,
    analytic_force_1d,
    build_random_obstacles,
)

COMMANDS = ("simulate", "find-critical", "sweep", "ode-oracle", "energy-check",
            "experiment1", "experiment2")

EXPERIMENT2_SIZES = (1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128)


@dataclass(frozen=True)
class AnalyticSpec:
    """An x-independent force family instead of a random landscape."""

    family: str = "cosine"
    amplitude: float = 1.0

    def __post_init__(self):
        if self.family not in ANALYTIC_FAMILIES:
            raise ConfigError(f"unknown force family {self.family!r}")


@dataclass(frozen=True)
class OdeSpec:
    family: str = "abs_log"
    amplitude: float = 1.0
    forces: tuple = (1.01, 1.1, 2.0, 10.0)
    dt: float = 1e-5

    def __post_init__(self):
        if self.family not in ANALYTIC_FAMILIES:
            raise ConfigError(f"unknown force family {self.family!r}")
        object.__setattr__(self, "forces", tuple(float(f) for f in self.forces))
        if not self.dt > 0:
            raise ConfigError("ode dt must be positive")


@dataclass(frozen=True)
class OutputSpec:
    """Snapshot and log cadence."""

    snapshots_per_period: int = 8
    trajectory_every: int = 1
    energy_steps: int = 2000
    f_star: float | None = None  # skip the bisection in `sweep` when given


@dataclass(frozen=True)
class ExperimentManifest:
    command: str = "simulate"
    config: SimConfig = field(default_factory=SimConfig)
    obstacle: ObstacleSpec | AnalyticSpec = field(default_factory=ObstacleSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    ode: OdeSpec = field(default_factory=OdeSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    output_dir: str = "out"
    workers: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {COMMANDS}")
        if not (isinstance(self.workers, int) and self.workers >= 1):
            raise ConfigError("workers must be a positive integer")

    def build_obstacles(self) -> ObstacleField:
        if isinstance(self.obstacle, AnalyticSpec):
            return analytic_force_1d(self.obstacle.family, amplitude=self.obstacle.amplitude)
        return build_random_obstacles(self.obstacle)

    def to_dict(self) -> dict:
        ob = dataclasses.asdict(self.obstacle)
        ob["kind"] = "analytic" if isinstance(self.obstacle, AnalyticSpec) else "spline"
        ode = dataclasses.asdict(self.ode)
        ode["forces"] = list(ode["forces"])
        return {
            "command": self.command,
            "sim": dataclasses.asdict(self.config),
            "obstacle": ob,
            "sweep": dataclasses.asdict(self.sweep),
            "ode": ode,
            "output": dataclasses.asdict(self.output),
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @property
    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentManifest":
        return parse_config(doc)


def _section(cls, doc, name):
    if doc is None:
        return cls()
    if not isinstance(doc, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {unknown}")
    try:
        return cls(**doc)
    except TypeError as e:
        raise ConfigError(f"bad {name!r} section: {e}") from e


def _obstacle(doc):
    doc = dict(doc or {})
    kind = doc.pop("kind", "spline")
    if kind == "spline":
        return _section(ObstacleSpec, doc, "obstacle")
    if kind == "analytic":
        return _section(AnalyticSpec, doc, "obstacle")
    raise ConfigError(f"obstacle kind must be 'spline' or 'analytic', got {kind!r}")


TOP_KEYS = {"command", "sim", "obstacle", "sweep", "ode", "output", "output_dir", "workers"}

# flag name -> (section, key)
FLAG_TARGETS = {
    "N": ("sim", "N"),
    "dt": ("sim", "dt"),
    "c": ("sim", "c"),
    "F": ("sim", "F"),
    "seed": ("obstacle", "rng_seed"),
    "out": (None, "output_dir"),
    "workers": (None, "workers"),
}


def parse_config(source=None, command: str | None = None, **flags) -> ExperimentManifest:
    """Build a validated manifest from a JSON path, a dict or nothing.

    Keyword flags (``N``, ``dt``, ``c``, ``F``, ``seed``, ``out``,
    ``workers``) override file values; ``None`` flags are ignored.
    """
    if source is None:
        doc = {}
    elif isinstance(source, dict):
        doc = json.loads(json.dumps(source))
    else:
        try:
            with open(source) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {source}: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    for name, value in flags.items():
        if value is None:
            continue
        if name not in FLAG_TARGETS:
            raise ConfigError(f"unknown flag {name!r}")
        section, key = FLAG_TARGETS[name]
        if section is None:
            doc[key] = value
        else:
            doc.setdefault(section, {})
            doc[section] = dict(doc[section] or {}, **{key: value})
    if command is not None:
        doc["command"] = command
    if "workers" in doc and "sweep" not in doc:
        doc["sweep"] = {"workers": doc["workers"]}
    elif "workers" in doc:
        doc["sweep"] = dict(doc["sweep"], workers=doc["workers"])
    sim = _section(SimConfig, doc.get("sim"), "sim")
    return ExperimentManifest(
        command=doc.get("command", "simulate"),
        config=sim,
        obstacle=_obstacle(doc.get("obstacle")),
        sweep=_section(SweepSpec, doc.get("sweep"), "sweep"),
        ode=_section(OdeSpec, doc.get("ode"), "ode"),
        output=_section(OutputSpec, doc.get("output"), "output"),
        output_dir=str(doc.get("output_dir", "out")),
        workers=doc.get("workers", 1),
    )
