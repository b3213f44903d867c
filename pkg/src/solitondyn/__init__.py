"""Semiclassical soliton dynamics in an external potential.

Computes constrained ground states, propagates h-scaled solitons with a
Strang split-step Fourier method and compares the barycenter motion with
the Newtonian point particle.
"""

from .config import ExperimentConfig
from .errors import SolitonError
from .grid import Grid, WaveField
from .groundstate import GroundState, SolverOptions, minimize_on_sphere
from .initial import InitialDatumSpec, PerturbationRecipe, build_initial_datum, exact_free_soliton
from .model import (HarmonicPotential, ModelParams, PowerNonlinearity, QuarticPotential,
                    ZeroPotential)
from .newton import integrate_newton, trajectory_distance
from .propagator import PropagatorState, evolve

__all__ = [
    "ExperimentConfig", "SolitonError", "Grid", "WaveField", "GroundState", "SolverOptions",
    "minimize_on_sphere", "InitialDatumSpec", "PerturbationRecipe", "build_initial_datum",
    "exact_free_soliton", "HarmonicPotential", "ModelParams", "PowerNonlinearity",
    "QuarticPotential", "ZeroPotential", "integrate_newton", "trajectory_distance",
    "PropagatorState", "evolve",
]
__version__ = "0.1.0"
