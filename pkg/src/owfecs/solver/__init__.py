"""LP relaxation, branch and bound and exhaustive reference solvers."""

from .kernel import BACKEND, get_kernel
from .lp import LinearProgram, LpSolution, LpState, NumericalInstabilityError, solve_lp

__all__ = [
    "BACKEND",
    "LinearProgram",
    "LpSolution",
    "LpState",
    "NumericalInstabilityError",
    "get_kernel",
    "solve_lp",
]
