import io
import math

import numpy as np
import pytest
import scipy.sparse as sp

from mecgrid.milp import MilpProblem
from mecgrid.solver import (BnbOptions, MilpSolution, UnknownBackendError, available_backends,
                            get_backend, read_mps, register_backend, relative_gap, simplex,
                            solve, solve_lp, solve_milp, unregister_backend, write_mps)

from cases import enumerate_milp, lp_oracle, random_milp


def lp(c, rows=(), lb=None, ub=None):
    p = MilpProblem()
    for j, cj in enumerate(c):
        p.add_var(f"x{j}", 0.0 if lb is None else lb[j], math.inf if ub is None else ub[j], obj=cj)
    for coefs, sense, rhs in rows:
        p.add_constraint(coefs, sense, rhs)
    return p


def dual_objective(p, sol):
    """Objective of the dual point (y, d) reported by the simplex."""
    lo, hi = p.row_bounds()
    total = 0.0
    for i, y in enumerate(sol.duals):
        if abs(y) > 1e-12:
            b = lo[i] if y > 0 else hi[i]
            assert math.isfinite(b), "dual sign infeasible"
            total += y * b
    for j, d in enumerate(sol.reduced_costs):
        if abs(d) > 1e-12:
            b = p.lower[j] if d > 0 else p.upper[j]
            assert math.isfinite(b), "reduced cost sign infeasible"
            total += d * b
    return total


class TestSimplexExamples:
    def test_single_bounded_variable(self):
        sol = solve_lp(lp([-1.0], ub=[3.0]))
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(3.0) and sol.objective == pytest.approx(-3.0)

    def test_symmetric_vertex(self):
        sol = solve_lp(lp([1.0, 1.0], [({0: 1, 1: 1}, ">=", 1.0)]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(1.0)

    def test_contradiction(self):
        sol = solve_lp(lp([1.0], [({0: 1}, ">=", 2.0), ({0: 1}, "<=", 1.0)]))
        assert sol.status == "infeasible"

    def test_unbounded(self):
        sol = solve_lp(lp([-1.0, 0.0], [({0: 1, 1: -1}, "<=", 1.0)]))
        assert sol.status == "unbounded"

    def test_free_variables(self):
        p = lp([1.0, 1.0], [({0: 1, 1: -1}, "==", 2.0), ({0: 1, 1: 1}, ">=", -4.0)],
               lb=[-math.inf, -math.inf])
        sol = solve_lp(p)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-4.0)
        assert sol.x[0] - sol.x[1] == pytest.approx(2.0)

    def test_no_rows(self):
        sol = simplex(np.array([1.0, -2.0]), sp.csc_matrix((0, 2)), np.zeros(0), np.zeros(0),
                      np.array([-1.0, 0.0]), np.array([1.0, 5.0]))
        assert sol.status == "optimal"
        np.testing.assert_allclose(sol.x, [-1.0, 5.0])

    def test_degenerate_cycle_prone(self):
        # Beale's example cycles under textbook Dantzig pricing without anti-cycling
        c = [-0.75, 150.0, -0.02, 6.0]
        rows = [({0: 0.25, 1: -60, 2: -0.04, 3: 9}, "<=", 0.0),
                ({0: 0.5, 1: -90, 2: -0.02, 3: 3}, "<=", 0.0),
                ({2: 1.0}, "<=", 1.0)]
        sol = solve_lp(lp(c, rows))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-0.05)


def random_lp(rng):
    m, n = int(rng.integers(1, 25)), int(rng.integers(1, 30))
    p = MilpProblem()
    for j in range(n):
        kind = rng.integers(4)
        lo = -math.inf if kind == 0 else float(rng.uniform(-5, 0))
        hi = math.inf if kind == 1 else float(rng.uniform(0, 5))
        p.add_var(f"x{j}", lo, hi, obj=float(rng.normal()))
    x0 = np.array([0.0 if not (math.isfinite(a) and math.isfinite(b)) else rng.uniform(a, b)
                   for a, b in zip(p.lower, p.upper)])
    for _ in range(m):
        cols = np.flatnonzero(rng.random(n) < 0.5)
        if cols.size == 0:
            cols = np.array([0])
        coefs = {int(j): float(rng.normal()) for j in cols}
        act = sum(a * x0[j] for j, a in coefs.items())
        sense = str(rng.choice(["<=", ">=", "=="]))
        shift = 0.0 if sense == "==" else float(rng.uniform(0, 1))
        p.add_constraint(coefs, sense, act + shift if sense == "<=" else act - shift)
    return p


class TestSimplexRandom:
    def test_matches_highs_and_duality(self):
        rng = np.random.default_rng(2024)
        checked = 0
        for _ in range(150):
            p = random_lp(rng)
            sol = solve_lp(p)
            ref = lp_oracle_or_unbounded(p)
            if ref == "unbounded":
                assert sol.status == "unbounded"
                continue
            assert sol.status == "optimal"
            assert sol.objective == pytest.approx(ref, rel=1e-6, abs=1e-6)
            assert p.max_violation(sol.x) <= 1e-7
            assert dual_objective(p, sol) == pytest.approx(sol.objective, rel=1e-6, abs=1e-6)
            checked += 1
        assert checked > 80


def lp_oracle_or_unbounded(p):
    from scipy.optimize import linprog

    lo, hi = p.row_bounds()
    A = p.matrix().toarray()
    res = linprog(p.c, A_ub=np.vstack([A[np.isfinite(hi)], -A[np.isfinite(lo)]]),
                  b_ub=np.concatenate([hi[np.isfinite(hi)], -lo[np.isfinite(lo)]]),
                  bounds=[(None if not math.isfinite(a) else a, None if not math.isfinite(b) else b)
                          for a, b in zip(p.lower, p.upper)], method="highs")
    if res.status == 3:
        return "unbounded"
    if res.status == 2:
        # the instance is feasible by construction; HiGHS presolve sometimes reports
        # infeasible for dual infeasible problems, so confirm with a zero objective
        zero = linprog(np.zeros_like(p.c), A_ub=np.vstack([A[np.isfinite(hi)],
                                                           -A[np.isfinite(lo)]]),
                       b_ub=np.concatenate([hi[np.isfinite(hi)], -lo[np.isfinite(lo)]]),
                       bounds=[(None if not math.isfinite(a) else a,
                                None if not math.isfinite(b) else b)
                               for a, b in zip(p.lower, p.upper)], method="highs")
        assert zero.status == 0
        return "unbounded"
    assert res.status == 0, res.message
    return float(res.fun)


class TestMilp:
    def test_two_binaries(self):
        p = MilpProblem()
        p.add_var("x1", kind="binary", obj=1.0)
        p.add_var("x2", kind="binary", obj=2.0)
        p.add_constraint({0: 1, 1: 1}, ">=", 1.5)
        sol = solve_milp(p)
        assert sol.status == "optimal"
        np.testing.assert_array_equal(sol.x, [1.0, 1.0])
        assert sol.objective == pytest.approx(3.0)

    def test_no_binaries_equals_lp(self):
        p = lp([1.0, 2.0], [({0: 1, 1: 1}, ">=", 1.0)])
        assert solve_milp(p).objective == pytest.approx(solve_lp(p).objective)
        np.testing.assert_allclose(solve_milp(p).x, solve_lp(p).x)

    def test_infeasible(self):
        p = MilpProblem()
        p.add_var("b", kind="binary")
        p.add_var("c", kind="binary")
        p.add_constraint({0: 1, 1: 1}, "==", 1.5)
        sol = solve_milp(p)
        assert sol.status == "infeasible" and not sol.has_solution

    def test_random_against_enumeration(self):
        rng = np.random.default_rng(99)
        for _ in range(30):
            p = random_milp(rng)
            sol = solve_milp(p)
            best = enumerate_milp(p)
            assert sol.status == "optimal"
            assert sol.objective == pytest.approx(best, rel=1e-6, abs=1e-6)
            # relaxation bound and integrality
            assert lp_oracle(p) <= best + 1e-7
            assert sol.root_objective <= sol.objective + 1e-7
            xb = sol.x[p.binary_mask]
            assert np.all(np.abs(xb - np.round(xb)) <= 1e-6)
            assert p.max_violation(sol.x) <= 1e-6
            objs = [o for _, o in sol.incumbent_history]
            assert all(b <= a for a, b in zip(objs, objs[1:]))

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        p = random_milp(rng, n_bin=10, n_cont=10, m=15)
        a, b = solve_milp(p), solve_milp(p)
        assert np.array_equal(a.x, b.x) and a.nodes == b.nodes

    def test_node_limit_reports_gap(self):
        rng = np.random.default_rng(11)
        hit = 0
        for _ in range(40):
            p = random_milp(rng, n_bin=12, n_cont=4, m=12)
            sol = solve_milp(p, BnbOptions(node_limit=2, root_heuristic=False))
            if sol.status == "node_limit":
                hit += 1
                assert sol.gap >= 0 and sol.bound <= sol.objective + 1e-9
            elif sol.status == "limit_infeasible":
                hit += 1
                assert sol.x is None
        assert hit > 0

    def test_options_validated(self):
        with pytest.raises(ValueError):
            BnbOptions(gap=-1)
        with pytest.raises(ValueError):
            BnbOptions(node_limit=0)
        with pytest.raises(ValueError):
            BnbOptions(branching="pseudo-cost")

    def test_relative_gap(self):
        assert relative_gap(10.0, 9.0) == pytest.approx(0.1)
        assert relative_gap(10.0, 11.0) == 0.0
        assert relative_gap(math.inf, 0.0) == math.inf


class TestBackends:
    def test_default_is_reference(self):
        assert get_backend() is get_backend("reference")
        assert "reference" in available_backends()

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("MECGRID_BACKEND", "highs")
        assert get_backend() is get_backend("highs")

    def test_mock_backend(self):
        calls = []

        def mock(problem, options):
            calls.append(problem)
            return MilpSolution("optimal", np.zeros(problem.n_vars), 0.0, backend="mock")

        register_backend("mock", mock)
        try:
            p = lp([1.0])
            assert solve(p, backend="mock").backend == "mock"
            assert calls == [p]
        finally:
            unregister_backend("mock")
        assert "mock" not in available_backends()

    def test_unknown(self):
        with pytest.raises(UnknownBackendError, match="nope"):
            solve(lp([1.0]), backend="nope")

    def test_highs_agrees_on_random(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            p = random_milp(rng)
            a, b = solve(p, backend="reference"), solve(p, backend="highs")
            assert a.objective == pytest.approx(b.objective, rel=1e-6, abs=1e-6)


class TestMps:
    def test_roundtrip_structure(self):
        rng = np.random.default_rng(8)
        p = random_milp(rng, n_bin=4, n_cont=5, m=6)
        buf = io.StringIO()
        write_mps(p, buf)
        text = buf.getvalue()
        for section in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
            assert f"\n{section}" in text
        q = read_mps(io.StringIO(text))
        assert q.n_vars == p.n_vars and q.n_rows == p.n_rows
        assert q.binary_mask.tolist() == p.binary_mask.tolist()
        # 12-character fields keep about ten significant digits
        np.testing.assert_allclose(q.c, p.c, rtol=1e-8)
        np.testing.assert_allclose(q.matrix().toarray(), p.matrix().toarray(), rtol=1e-8)
        assert q.obj_constant == pytest.approx(p.obj_constant, rel=1e-8, abs=1e-12)
        assert solve_milp(q).objective == pytest.approx(solve_milp(p).objective, rel=1e-7)

    def test_fixed_columns_and_names(self, tmp_path):
        p = MilpProblem("demo")
        p.add_var("fixed", 2.0, 2.0, obj=1.0)
        p.add_var("free", -math.inf, math.inf)
        p.add_constraint({0: 1.0, 1: 1.0}, "<=", 5.0, name="cap")
        path = tmp_path / "demo.mps"
        write_mps(p, path)
        text = path.read_text()
        assert " FX BND       C0000001" in text and " FR BND       C0000002" in text
        assert "* C0000001 fixed" in text and "* R0000001 cap" in text
        q = read_mps(path)
        assert q.lower[0] == q.upper[0] == 2.0
        assert q.lower[1] == -math.inf and q.upper[1] == math.inf
