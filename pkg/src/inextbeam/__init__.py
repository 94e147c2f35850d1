"""Spectral Galerkin simulator for the nonlinear inextensible cantilever in axial flow."""

__version__ = "0.1.0"

from .assembly import TensorSet, assemble, cached_assemble, load_tensors, save_tensors
from .config import SimConfig, load, load_preset
from .dynamics import ModalSystem, Trajectory, simulate, sweep
from .flutter import FlutterParams, find_Ucrit, solve_growth_rates
from .modes import ModeBasis, solve_mode_numbers
from .quadrature import QuadratureGrid

__all__ = [
    "__version__", "QuadratureGrid", "ModeBasis", "solve_mode_numbers", "TensorSet", "assemble",
    "cached_assemble", "save_tensors", "load_tensors", "FlutterParams", "solve_growth_rates", "find_Ucrit",
    "SimConfig", "load", "load_preset", "ModalSystem", "Trajectory", "simulate", "sweep",
]
