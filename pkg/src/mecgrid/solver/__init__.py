from .backends import (DEFAULT_BACKEND, UnknownBackendError, available_backends,
                       get_backend, register_backend, solve, unregister_backend)
from .bnb import BnbOptions, MilpSolution, relative_gap, solve_lp, solve_milp
from .mps import read_mps, write_mps
from .simplex import LpSolution, simplex

__all__ = [
    "BnbOptions", "DEFAULT_BACKEND", "LpSolution", "MilpSolution", "UnknownBackendError",
    "available_backends", "get_backend", "read_mps", "register_backend", "relative_gap",
    "simplex", "solve", "solve_lp", "solve_milp", "unregister_backend", "write_mps",
]
