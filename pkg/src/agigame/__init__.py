"""Simulation and equilibrium analysis of a repeated AGI-development game
with verification, sanctions and staged deployment."""

from .analysis import (
    ConditionReport,
    DeviationReport,
    Verdict,
    check_theorem1,
    defection_bound,
    deviation_library,
    deviation_suite,
    deviation_test,
    empirical_defection_rate,
    supermodularity_check,
)
from .engine import EnsembleStats, SimulationConfig, run_ensemble, run_episode, spawn_entrants
from .kernels import BACKEND
from .mechanisms import MechanismConfig, SanctionLevel, SanctionState
from .model import Action, GameState, JointChoice, Parameters, Player, Trajectory, validate_parameters
from .rng import derive_rng
from .strategies import StrategyKind, StrategySpec

__version__ = "0.1.0"
