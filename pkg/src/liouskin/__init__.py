"""Transport and skin localization in single-particle Lindblad chains with asymmetric incoherent hopping."""

from .classical import generator, propagate, steady_state_closed_form, symmetrize
from .config import ExperimentConfig
from .dynamics import evolve, initial_state
from .lattice import LatticeModel, cumulative_walk, make_asymmetry, rates
from .liouvillian import assemble, localization_metrics, rhs, spectrum

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "LatticeModel",
    "assemble",
    "cumulative_walk",
    "evolve",
    "generator",
    "initial_state",
    "localization_metrics",
    "make_asymmetry",
    "propagate",
    "rates",
    "rhs",
    "spectrum",
    "steady_state_closed_form",
    "symmetrize",
]
