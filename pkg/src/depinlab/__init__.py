"""Numerical study of interface depinning in a periodic random landscape."""
from .errors import ConfigError, DepinLabError, InconclusiveRunError, NumericalError, PinnedError
from .evolution import SimConfig, TravelResult, measure_period, run_until_travel
from .obstacles import ObstacleField, ObstacleSpec, build_random_obstacles, analytic_force_1d

__version__ = "0.1.0"
