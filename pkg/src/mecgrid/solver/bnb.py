"""Best-first branch-and-bound over binary variables."""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..milp import MilpProblem
from .simplex import LpSolution, simplex


@dataclass(frozen=True)
class BnbOptions:
    gap: float = 1e-6
    node_limit: int = 200_000
    time_limit: float = 3600.0
    branching: str = "most-fractional"
    int_tol: float = 1e-6
    feas_tol: float = 1e-7
    root_heuristic: bool = True

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError("gap must be >= 0")
        if self.node_limit <= 0 or self.time_limit <= 0:
            raise ValueError("node and time limits must be positive")
        if self.branching != "most-fractional":
            raise ValueError(f"unsupported branching rule {self.branching!r}")


@dataclass
class MilpSolution:
    status: str
    x: np.ndarray | None
    objective: float
    bound: float = -math.inf
    gap: float = math.inf
    nodes: int = 0
    lp_iterations: int = 0
    incumbent_history: list[tuple[int, float]] = field(default_factory=list)
    root_objective: float = math.nan
    backend: str = "reference"
    message: str = ""

    @property
    def has_solution(self) -> bool:
        return self.x is not None and self.status in ("optimal", "node_limit", "time_limit")


def relative_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    if not math.isfinite(bound):
        return math.inf
    return max(0.0, incumbent - bound) / max(abs(incumbent), 1e-9)


def _lp_arrays(problem: MilpProblem):
    A = problem.matrix().tocsc()
    rlo, rhi = problem.row_bounds()
    return problem.c, A, rlo, rhi


def solve_lp(problem: MilpProblem, **kw) -> LpSolution:
    """LP relaxation of ``problem``; the objective includes its constant."""
    c, A, rlo, rhi = _lp_arrays(problem)
    sol = simplex(c, A, rlo, rhi, problem.lower, problem.upper, **kw)
    if sol.status == "optimal":
        sol.objective += problem.obj_constant
    return sol


def solve_milp(problem: MilpProblem, options: BnbOptions | None = None) -> MilpSolution:
    opts = options or BnbOptions()
    start = time.perf_counter()
    c, A, rlo, rhi = _lp_arrays(problem)
    const = problem.obj_constant
    lb0, ub0 = problem.lower, problem.upper
    binmask = problem.binary_mask
    bins = np.flatnonzero(binmask)
    iters = 0

    def lp(lb, ub) -> LpSolution:
        nonlocal iters
        sol = simplex(c, A, rlo, rhi, lb, ub)
        iters += sol.iterations
        return sol

    def fractional(x):
        if bins.size == 0:
            return np.zeros(0, dtype=np.int64)
        v = x[bins]
        return bins[np.abs(v - np.round(v)) > opts.int_tol]

    root = lp(lb0, ub0)
    if root.status != "optimal":
        return MilpSolution(root.status, None, math.nan, nodes=1, lp_iterations=iters,
                            message=root.message)
    root_obj = root.objective + const

    best_x: np.ndarray | None = None
    best_obj = math.inf
    history: list[tuple[int, float]] = []
    nodes = 1

    def cutoff() -> float:
        if not math.isfinite(best_obj):
            return math.inf
        return best_obj - opts.gap * max(abs(best_obj), 1e-9)

    def accept(x, lb, ub):
        """Record an integral LP point, polishing the binaries to exact 0/1."""
        nonlocal best_x, best_obj, nodes
        x = x.copy()
        r = np.round(x[bins])
        if bins.size and np.max(np.abs(x[bins] - r)) > 1e-9:
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[bins] = r
            ub2[bins] = r
            pol = lp(lb2, ub2)
            nodes += 1
            if pol.status != "optimal":
                return
            x = pol.x.copy()
        x[bins] = r
        # degenerate basics can sit a few ulps outside their bounds
        np.clip(x, problem.lower, problem.upper, out=x)
        obj = float(c @ x) + const
        if obj < best_obj:
            best_x, best_obj = x, obj
            history.append((nodes, obj))

    counter = itertools.count()
    heap: list = []

    def push(sol: LpSolution, lb, ub, depth):
        obj = sol.objective + const
        if obj >= cutoff():
            return
        if fractional(sol.x).size == 0:
            accept(sol.x, lb, ub)
        else:
            heapq.heappush(heap, (obj, -depth, next(counter), sol.x, lb, ub))

    push(root, lb0.copy(), ub0.copy(), 0)

    if heap and opts.root_heuristic:
        x = root.x[bins]
        tried = set()
        for cand in (np.where(x > opts.int_tol, 1.0, 0.0), np.round(x)):
            key = cand.tobytes()
            if key in tried:
                continue
            tried.add(key)
            lb, ub = lb0.copy(), ub0.copy()
            lb[bins] = np.maximum(cand, lb0[bins])
            ub[bins] = np.minimum(cand, ub0[bins])
            if np.any(lb > ub):
                continue
            sol = lp(lb, ub)
            nodes += 1
            if sol.status == "optimal":
                accept(sol.x, lb, ub)

    status = "optimal"
    while heap:
        if heap[0][0] >= cutoff():
            heap.clear()
            break
        if nodes >= opts.node_limit:
            status = "node_limit"
            break
        if time.perf_counter() - start > opts.time_limit:
            status = "time_limit"
            break
        _, negdepth, _, x, lb, ub = heapq.heappop(heap)
        frac = fractional(x)
        v = x[frac]
        j = int(frac[np.argmin(np.abs(v - 0.5))])  # argmin keeps lowest index on ties
        first = 1.0 if x[j] >= 0.5 else 0.0
        for val in (first, 1.0 - first):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = val
            sol = lp(clb, cub)
            nodes += 1
            if sol.status == "optimal":
                push(sol, clb, cub, -negdepth + 1)
            elif sol.status in ("failed", "unbounded"):
                return MilpSolution("failed", best_x, best_obj, nodes=nodes,
                                    lp_iterations=iters, incumbent_history=history,
                                    root_objective=root_obj,
                                    message=f"node LP {sol.status}: {sol.message}")

    if heap:
        bound = min(h[0] for h in heap)
        bound = min(bound, best_obj)
    else:
        bound = best_obj if math.isfinite(best_obj) else root_obj
    if best_x is None:
        st = "infeasible" if status == "optimal" else "limit_infeasible"
        return MilpSolution(st, None, math.nan, bound, math.inf, nodes, iters, history,
                            root_obj)
    return MilpSolution(status, best_x, best_obj, bound, relative_gap(best_obj, bound),
                        nodes, iters, history, root_obj)
