"""Simulation lab for non-stationary delayed bandits with intermediate observations."""
from .core import ConstantDelay, GeometricDelay, Mixture, NsdInstance, Segment, table1_instance
from .environment import Environment, SwitchSchedule, generate_shifted_instance
from .optimism import optimistic_value
from .policies import NsdPsrl, NsdUcrl2, SwUcb, Ucb, make_policy
from .runner import ExperimentConfig, PolicySpec, run_experiment

__all__ = [
    "ConstantDelay", "GeometricDelay", "Mixture", "NsdInstance", "Segment", "table1_instance",
    "Environment", "SwitchSchedule", "generate_shifted_instance", "optimistic_value",
    "NsdPsrl", "NsdUcrl2", "SwUcb", "Ucb", "make_policy",
    "ExperimentConfig", "PolicySpec", "run_experiment",
]
__version__ = "0.1.0"
