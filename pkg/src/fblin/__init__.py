"""Feedback-linearizing transformation learning for discrete-time systems.

The package trains a small neural transformation T(x) and the pole-placing
feedback u = -c T(x) so that the controlled nonlinear plant becomes exactly
linear in the transformed coordinates, fitting a functional-equation
residual over a growing family of domains.  A power-series baseline and a
closed-form benchmark round out the toolkit.
"""

from .backends import backend_name
from .linalg import DesignSpec, SpectralReport, check_assumptions, eigenvalues, solve_sylvester
from .network import NetworkParams
from .residuals import PinningTarget, solve_pinning
from .system import benchmark_design, benchmark_system, equilibrium_data
from .training import default_benchmark_schedule, make_grid, train, train_best_of

__all__ = [
    "DesignSpec",
    "NetworkParams",
    "PinningTarget",
    "SpectralReport",
    "backend_name",
    "benchmark_design",
    "benchmark_system",
    "check_assumptions",
    "default_benchmark_schedule",
    "eigenvalues",
    "equilibrium_data",
    "make_grid",
    "solve_pinning",
    "solve_sylvester",
    "train",
    "train_best_of",
]

__version__ = "0.1.0"
