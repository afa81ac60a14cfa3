"""Finite-difference solver for a chemotaxis-consumption system.

Backward Euler in time on the substituted unknowns ``(u, z)`` with
``z = sqrt(v + alpha**2)``, truncated nonlinearities and a Picard loop per
step; cell-centred finite differences with zero-flux walls in space.
"""

from .config import RunConfig, parse_config
from .grid import FluxScheme, Grid, build_grid
from .scheme import SchemeParams, State, StepResult, initial_state, solve_step

__all__ = [
    "FluxScheme",
    "Grid",
    "RunConfig",
    "SchemeParams",
    "State",
    "StepResult",
    "build_grid",
    "initial_state",
    "parse_config",
    "solve_step",
]
