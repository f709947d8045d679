"""Bounded-variable primal revised simplex.

Solves ``min c@x  s.t.  row_lo <= A@x <= row_hi,  lb <= x <= ub``.

Each row gets a logical variable ``w = A@x`` so the working system is
``[A, -I] @ [x; w] = 0`` with every variable boxed (possibly by infinite
bounds).  The basis starts at the logicals.  Phase one minimizes the sum of
bound infeasibilities of the basic variables, phase two the true cost; both
use the same iteration with a Harris two-pass ratio test and bound flipping.
The basis inverse is a sparse LU (SuperLU) plus a product-form eta file,
refactorized every ``refactor_every`` pivots.  Pricing is Dantzig's rule with
a switch to Bland's rule while the objective stalls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

AT_LOWER, AT_UPPER, FREE_ZERO, FIXED, BASIC = 0, 1, 2, 3, -1


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | failed
    x: np.ndarray
    objective: float
    iterations: int = 0
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reduced_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    row_activity: np.ndarray = field(default_factory=lambda: np.zeros(0))
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


class _Factor:
    def __init__(self, m: int):
        self.m = m
        self.lu = None
        self.etas: list[tuple[int, np.ndarray]] = []

    def refactor(self, B: sp.csc_matrix):
        self.lu = splu(B, permc_spec="COLAMD")
        self.etas = []

    def ftran(self, b: np.ndarray) -> np.ndarray:
        x = self.lu.solve(b)
        for r, a in self.etas:
            t = x[r] / a[r]
            if t != 0.0:
                x -= t * a
            x[r] = t
        return x

    def btran(self, c: np.ndarray) -> np.ndarray:
        v = c.copy()
        for r, a in reversed(self.etas):
            s = v @ a - a[r] * v[r]
            v[r] = (v[r] - s) / a[r]
        return self.lu.solve(v, trans="T")

    def update(self, r: int, alpha: np.ndarray):
        self.etas.append((r, alpha.copy()))


def simplex(c, A, row_lo, row_hi, lb, ub, *, tol_feas: float = 1e-9,
            tol_opt: float = 1e-9, tol_piv: float = 1e-9, max_iter: int | None = None,
            refactor_every: int = 48, stall_limit: int = 60) -> LpSolution:
    c = np.asarray(c, dtype=float)
    n = c.size
    A = sp.csc_matrix(A, dtype=float)
    m = A.shape[0]
    if A.shape[1] != n:
        raise ValueError("A and c disagree on the column count")
    lo = np.concatenate([np.asarray(lb, float), np.asarray(row_lo, float)])
    hi = np.concatenate([np.asarray(ub, float), np.asarray(row_hi, float)])
    N = n + m

    if np.any(lo > hi):
        return LpSolution("infeasible", np.zeros(n), math.nan,
                          message="a lower bound exceeds its upper bound")
    if m == 0:
        return _solve_boxes(c, lo, hi)

    A_ext = sp.hstack([A, -sp.identity(m, format="csc")], format="csc")
    A_ext.sort_indices()
    A_T = A.T.tocsr()
    indptr, indices, data = A_ext.indptr, A_ext.indices, A_ext.data

    cost = np.concatenate([c, np.zeros(m)])
    cscale = max(1.0, float(np.max(np.abs(c), initial=0.0)))
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    status = np.empty(N, dtype=np.int64)
    z = np.zeros(N)
    fin_lo, fin_hi = np.isfinite(lo), np.isfinite(hi)
    status[:] = FREE_ZERO
    status[fin_hi] = AT_UPPER
    z[fin_hi] = hi[fin_hi]
    status[fin_lo] = AT_LOWER
    z[fin_lo] = lo[fin_lo]
    fixed = fin_lo & fin_hi & (lo == hi)
    status[fixed] = FIXED

    basis = np.arange(n, N)
    status[basis] = BASIC
    fac = _Factor(m)

    def column(j):
        col = np.zeros(m)
        s, e = indptr[j], indptr[j + 1]
        col[indices[s:e]] = data[s:e]
        return col

    def refactor():
        fac.refactor(A_ext[:, basis].tocsc())

    def basic_values():
        zn = z.copy()
        zn[basis] = 0.0
        return fac.ftran(-(A_ext @ zn))

    try:
        refactor()
    except RuntimeError as exc:  # pragma: no cover - logical basis is -I
        return LpSolution("failed", np.zeros(n), math.nan, message=str(exc))
    xB = basic_values()

    it = 0
    bland = False
    best_obj = math.inf
    stall = 0
    last_phase = None
    final_checks = 0

    while True:
        if it >= max_iter:
            return _pack("failed", z, basis, xB, c, A, n, None, None, it,
                         "iteration limit reached")
        if len(fac.etas) >= refactor_every:
            try:
                refactor()
            except RuntimeError as exc:
                return _pack("failed", z, basis, xB, c, A, n, None, None, it, str(exc))
            xB = basic_values()

        loB, hiB = lo[basis], hi[basis]
        below = xB < loB - tol_feas
        above = xB > hiB + tol_feas
        phase1 = bool(below.any() or above.any())

        if phase1:
            cB = np.where(below, -1.0, np.where(above, 1.0, 0.0))
            obj_now = float(np.sum(loB[below] - xB[below]) + np.sum(xB[above] - hiB[above]))
            tol_d = tol_opt
        else:
            cB = cost[basis]
            obj_now = float(cost[basis] @ xB + cost @ np.where(status == BASIC, 0.0, z))
            tol_d = tol_opt * cscale
        if last_phase != phase1:
            best_obj, stall, bland = math.inf, 0, False
            last_phase = phase1

        y = fac.btran(cB)
        d = np.empty(N)
        if phase1:
            d[:n] = -(A_T @ y)
        else:
            d[:n] = c - A_T @ y
        d[n:] = y
        d[basis] = 0.0

        inc = ((status == AT_LOWER) | (status == FREE_ZERO)) & (d < -tol_d)
        dec = ((status == AT_UPPER) | (status == FREE_ZERO)) & (d > tol_d)
        elig = inc | dec
        if not elig.any():
            if len(fac.etas) and final_checks < 3:
                # confirm with a fresh factorization before declaring the outcome
                final_checks += 1
                refactor()
                xB = basic_values()
                continue
            if phase1:
                return _pack("infeasible", z, basis, xB, c, A, n, None, None, it,
                             f"sum of infeasibilities {obj_now:.3g}")
            return _pack("optimal", z, basis, xB, c, A, n, y, d, it, "")
        final_checks = 0

        if obj_now < best_obj - 1e-12 * max(1.0, abs(best_obj) if math.isfinite(best_obj) else 1.0):
            best_obj = obj_now
            stall = 0
            bland = False
        else:
            stall += 1
            if stall > stall_limit:
                bland = True

        if bland:
            q = int(np.flatnonzero(elig)[0])
        else:
            q = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
        s = 1.0 if d[q] < 0 else -1.0

        alpha = fac.ftran(column(q))
        delta = -s * alpha  # d xB / dt

        # ratio test ----------------------------------------------------------
        t_exact = np.full(m, np.inf)
        t_relax = np.full(m, np.inf)
        dec_mask = delta < -tol_piv
        inc_mask = delta > tol_piv
        if phase1:
            feas = ~(below | above)
            mk = inc_mask & below
            t_exact[mk] = (loB[mk] - xB[mk]) / delta[mk]
            t_relax[mk] = (loB[mk] + tol_feas - xB[mk]) / delta[mk]
            mk = dec_mask & above
            t_exact[mk] = (xB[mk] - hiB[mk]) / -delta[mk]
            t_relax[mk] = (xB[mk] - hiB[mk] + tol_feas) / -delta[mk]
            dec_f = dec_mask & feas
            inc_f = inc_mask & feas
        else:
            dec_f, inc_f = dec_mask, inc_mask
        mk = dec_f & np.isfinite(loB)
        t_exact[mk] = (xB[mk] - loB[mk]) / -delta[mk]
        t_relax[mk] = (xB[mk] - loB[mk] + tol_feas) / -delta[mk]
        mk = inc_f & np.isfinite(hiB)
        t_exact[mk] = (hiB[mk] - xB[mk]) / delta[mk]
        t_relax[mk] = (hiB[mk] - xB[mk] + tol_feas) / delta[mk]

        t_flip = hi[q] - lo[q] if (math.isfinite(hi[q]) and math.isfinite(lo[q])) else math.inf

        r = -1
        if bland:
            t_min = float(np.min(t_exact))
            if math.isfinite(t_min):
                ties = np.flatnonzero(t_exact <= t_min + 1e-12)
                r = int(ties[np.argmin(basis[ties])])
                t = max(t_min, 0.0)
        else:
            t_max = float(np.min(t_relax))
            if math.isfinite(t_max):
                cand = np.flatnonzero(t_exact <= t_max)
                r = int(cand[np.argmax(np.abs(delta[cand]))])
                t = max(float(t_exact[r]), 0.0)

        if r < 0 or t_flip <= t:
            if not math.isfinite(t_flip):
                if phase1:
                    return _pack("failed", z, basis, xB, c, A, n, None, None, it,
                                 "phase one ray without breakpoint")
                return _pack("unbounded", z, basis, xB, c, A, n, None, None, it, "")
            # bound flip, basis unchanged
            xB += t_flip * delta
            if status[q] == AT_LOWER:
                status[q], z[q] = AT_UPPER, hi[q]
            else:
                status[q], z[q] = AT_LOWER, lo[q]
            it += 1
            continue

        p = int(basis[r])
        xB += t * delta
        entering_value = z[q] + s * t
        if delta[r] < 0:
            hits_upper = phase1 and above[r]
        else:
            hits_upper = not (phase1 and below[r])
        if hits_upper:
            status[p], z[p] = AT_UPPER, hi[p]
        else:
            status[p], z[p] = AT_LOWER, lo[p]
        if math.isfinite(lo[p]) and lo[p] == hi[p]:
            status[p] = FIXED
        basis[r] = q
        status[q] = BASIC
        xB[r] = entering_value
        if abs(alpha[r]) < 1e-11:
            refactor()
            xB = basic_values()
        else:
            fac.update(r, alpha)
        it += 1


def _solve_boxes(c, lo, hi) -> LpSolution:
    x = np.zeros(c.size)
    for j, cj in enumerate(c):
        if cj > 0:
            x[j] = lo[j]
        elif cj < 0:
            x[j] = hi[j]
        else:
            x[j] = lo[j] if math.isfinite(lo[j]) else (hi[j] if math.isfinite(hi[j]) else 0.0)
        if not math.isfinite(x[j]):
            return LpSolution("unbounded", np.zeros(c.size), -math.inf)
    return LpSolution("optimal", x, float(c @ x), duals=np.zeros(0),
                      reduced_costs=c.copy(), row_activity=np.zeros(0))


def _pack(state, z, basis, xB, c, A, n, y, d, it, msg) -> LpSolution:
    full = z.copy()
    full[basis] = xB
    x = full[:n].copy()
    act = A @ x
    if state == "optimal":
        return LpSolution(state, x, float(c @ x), it, y.copy(), d[:n].copy(), act, msg)
    obj = {"infeasible": math.nan, "unbounded": -math.inf}.get(state, math.nan)
    return LpSolution(state, x, obj, it, row_activity=act, message=msg)
