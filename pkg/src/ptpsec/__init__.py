"""Secured PTP engine with an adversarial network simulator."""

from .node import SecurityMode
from .scenario import ConfigError, ScenarioConfig, load_config, run_scenario
from .simnet import Simulation

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "SecurityMode",
    "Simulation",
    "load_config",
    "run_scenario",
]

__version__ = "1.0.0"
