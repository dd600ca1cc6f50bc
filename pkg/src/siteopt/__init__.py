"""Constrained multi-objective reinforcement learning toolkit for affordable
housing site selection: synthetic city generation, a 127-constraint
compliance engine, a sequential selection environment, preference-conditioned
policy optimization, classical baselines, quality indicators, and an
interactive exploration service."""

from .domain import (
    CityInstance,
    InvalidArgumentError,
    ObjectiveBounds,
    ObjectiveVector,
    Parcel,
    PortfolioState,
    PreferenceVector,
    dominates,
    normalize,
)
from .citygen import CityGenSpec, PRESETS, generate_city, read_city, write_city
from .constraints import ConstraintRegistry, build_registry, check, penalty, repair
from .env import Environment, episode_feasible
from .metrics import gini, hypervolume_exact, igd, nondominated_mask, rcr
from .ppo import ParetoArchive, PpoConfig, train_population
from .rewards import RewardParams, portfolio_objectives

__version__ = "0.1.0"

__all__ = [
    "CityGenSpec", "CityInstance", "ConstraintRegistry", "Environment",
    "InvalidArgumentError", "ObjectiveBounds", "ObjectiveVector", "Parcel",
    "ParetoArchive", "PortfolioState", "PpoConfig", "PreferenceVector",
    "PRESETS", "RewardParams", "build_registry", "check", "dominates",
    "episode_feasible", "generate_city", "gini", "hypervolume_exact", "igd",
    "nondominated_mask", "normalize", "penalty", "portfolio_objectives",
    "rcr", "read_city", "repair", "train_population", "write_city",
    "__version__",
]
