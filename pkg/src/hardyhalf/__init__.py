"""Sharp Hardy-type inequalities on the upper half-space, checked numerically."""

from .core_math import DomainError, Params, PoleError
from .experiments import REGISTRY, ExperimentConfig, ExperimentReport, make_config, run
from .potentials import PotentialContext

__all__ = ["DomainError", "Params", "PoleError", "PotentialContext", "REGISTRY", "ExperimentConfig",
           "ExperimentReport", "make_config", "run"]
__version__ = "0.1.0"
