"""Scaled-random-walk approximation of Markovian BSDEs and its convergence studies."""

from .lattice import TimeGrid, WalkMarginal, make_grid, walk_marginal
from .problem import ProblemSpec, TerminalCondition, Generator, build_problem
from .reference import ContinuousSolution
from .solver import LatticeSolution, solve_backward
from .wasserstein import Distribution1D, gaussian_quantiles, pushforward, wasserstein_r

__all__ = [
    "TimeGrid", "WalkMarginal", "make_grid", "walk_marginal",
    "ProblemSpec", "TerminalCondition", "Generator", "build_problem",
    "ContinuousSolution", "LatticeSolution", "solve_backward",
    "Distribution1D", "gaussian_quantiles", "pushforward", "wasserstein_r",
]

__version__ = "0.1.0"
