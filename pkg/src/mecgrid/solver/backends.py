"""Named MILP backends.

``reference`` is the in-package simplex + branch-and-bound engine and the
default.  ``highs`` wraps ``scipy.optimize.milp`` for cross-checking.  The
``MECGRID_BACKEND`` environment variable overrides the default name.
"""

from __future__ import annotations

import math
import os
from typing import Callable

import numpy as np

from ..milp import MilpProblem
from .bnb import BnbOptions, MilpSolution, solve_milp

Backend = Callable[[MilpProblem, BnbOptions], MilpSolution]

DEFAULT_BACKEND = "reference"
_REGISTRY: dict[str, Backend] = {}


class UnknownBackendError(KeyError):
    pass


def register_backend(name: str, fn: Backend) -> None:
    _REGISTRY[name] = fn


def unregister_backend(name: str) -> None:
    if name == DEFAULT_BACKEND:
        raise ValueError("the reference backend cannot be removed")
    _REGISTRY.pop(name, None)


def available_backends() -> list[str]:
    return sorted(_REGISTRY)


def get_backend(name: str | None = None) -> Backend:
    name = name or os.environ.get("MECGRID_BACKEND") or DEFAULT_BACKEND
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownBackendError(
            f"unknown backend {name!r}; available: {', '.join(available_backends())}"
        ) from None


def solve(problem: MilpProblem, options: BnbOptions | None = None,
          backend: str | None = None) -> MilpSolution:
    return get_backend(backend)(problem, options or BnbOptions())


def _reference(problem: MilpProblem, options: BnbOptions) -> MilpSolution:
    return solve_milp(problem, options)


def _highs(problem: MilpProblem, options: BnbOptions) -> MilpSolution:
    from scipy.optimize import Bounds, LinearConstraint, milp

    lo, hi = problem.row_bounds()
    cons = [LinearConstraint(problem.matrix(), lo, hi)] if problem.n_rows else []
    res = milp(problem.c, constraints=cons,
               integrality=problem.binary_mask.astype(int),
               bounds=Bounds(problem.lower, problem.upper),
               options={"mip_rel_gap": options.gap, "time_limit": options.time_limit,
                        "node_limit": options.node_limit})
    status = {0: "optimal", 1: "time_limit", 2: "infeasible", 3: "unbounded"}.get(
        res.status, "failed")
    if res.x is None:
        if status == "time_limit":
            status = "limit_infeasible"
        return MilpSolution(status, None, math.nan, backend="highs", message=res.message)
    x = np.asarray(res.x, dtype=float)
    mask = problem.binary_mask
    x[mask] = np.round(x[mask])
    np.clip(x, problem.lower, problem.upper, out=x)
    obj = problem.objective_value(x)
    bound = getattr(res, "mip_dual_bound", None)
    bound = obj if bound is None else float(bound) + problem.obj_constant
    return MilpSolution(status, x, obj, bound, 0.0 if status == "optimal" else math.inf,
                        int(getattr(res, "mip_node_count", 0) or 0), backend="highs",
                        message=res.message)


register_backend(DEFAULT_BACKEND, _reference)
register_backend("highs", _highs)
