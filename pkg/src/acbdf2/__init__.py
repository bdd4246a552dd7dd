"""Linear variable-step BDF2 for the Allen-Cahn equation with general mobility."""

from .grid import Grid, sup_norm
from .model import Mobility, Problem, discrete_energy, modified_energy, stabilizer_bound
from .stepper import bdf1_step, bdf2_step, max_stable_step, first_step_cap, optimal_eta
from .experiments import simulate

__all__ = [
    "Grid",
    "Mobility",
    "Problem",
    "bdf1_step",
    "bdf2_step",
    "discrete_energy",
    "first_step_cap",
    "max_stable_step",
    "modified_energy",
    "optimal_eta",
    "simulate",
    "stabilizer_bound",
    "sup_norm",
]
