import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mecgrid.model import (AcLine, CaseError, PerUnitBase, PolyCurve, assemble_admittance,
                           from_per_unit, numeric_fields, require_valid, to_per_unit,
                           validate_case)

from cases import random_cases, toy_case


class TestValidateCase:
    def test_toy_case_is_clean(self):
        report = validate_case(toy_case())
        assert report.ok
        assert len(report) == 0

    def test_duplicate_ac_hub_id(self):
        case = toy_case()
        case = dataclasses.replace(case, ac_hubs=case.ac_hubs + (case.ac_hubs[1],))
        report = validate_case(case)
        assert len(report) == 1
        assert "'B'" in report.violations[0].message

    def test_battery_initial_above_capacity(self):
        case = toy_case(battery=True)
        bat = dataclasses.replace(case.batteries[0], e_initial=150.0)
        report = validate_case(dataclasses.replace(case, batteries=(bat,)))
        assert len(report) == 1
        assert "BatteryUnit" in report.violations[0].message

    def test_profile_length(self):
        case = toy_case(horizon=3)
        hub = dataclasses.replace(case.ac_hubs[1], demand_p=(1.0, 2.0))
        report = validate_case(dataclasses.replace(case, ac_hubs=(case.ac_hubs[0], hub)))
        assert [v.path for v in report] == ["ac_hubs[1].demand_p"]

    def test_unknown_hub_and_missing_reference(self):
        case = toy_case()
        hubs = tuple(dataclasses.replace(h, is_reference=False) for h in case.ac_hubs)
        gen = dataclasses.replace(case.turbines[0], hub="Z")
        report = validate_case(dataclasses.replace(case, ac_hubs=hubs, turbines=(gen,)))
        text = str(report)
        assert "reference" in text and "'Z'" in text

    def test_equal_pipe_pressures_rejected(self):
        case = toy_case()
        pipe = dataclasses.replace(case.pipes[0], pi0_to=100.0)
        report = validate_case(dataclasses.replace(case, pipes=(pipe,)))
        assert "singular" in str(report)

    def test_nonconvex_fuel_curve(self):
        case = toy_case()
        gen = dataclasses.replace(case.turbines[0], fuel_curve=PolyCurve((1.0, 0.5, -0.01)))
        report = validate_case(dataclasses.replace(case, turbines=(gen,)))
        assert any("convex" in v.message for v in report)

    def test_require_valid_raises_with_report(self):
        case = dataclasses.replace(toy_case(), horizon=0)
        with pytest.raises(CaseError) as info:
            require_valid(case)
        assert not info.value.report.ok

    @given(random_cases())
    def test_random_cases_valid_and_pure(self, case):
        first = validate_case(case)
        assert first.ok, str(first)
        assert validate_case(case) == first


def _line(a, b, g, bb):
    return AcLine(f"{a}-{b}", str(a), str(b), g, bb, 1.0)


class TestAdmittance:
    def test_single_line(self):
        Y = assemble_admittance([_line(0, 1, 2.0, -10.0)], 2)
        np.testing.assert_array_equal(Y.G, [[2, -2], [-2, 2]])
        np.testing.assert_array_equal(Y.B, [[-10, 10], [10, -10]])

    def test_no_lines(self):
        Y = assemble_admittance([], 3)
        assert not Y.G.any() and not Y.B.any()
        assert Y.G.shape == (3, 3)

    def test_parallel_lines_add(self):
        Y = assemble_admittance([_line(0, 1, 1.0, -5.0), _line(0, 1, 1.0, -5.0)], 2)
        np.testing.assert_array_equal(Y.G, [[2, -2], [-2, 2]])
        np.testing.assert_array_equal(Y.B, [[-10, 10], [10, -10]])

    def test_endpoint_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            assemble_admittance([_line(0, 5, 1.0, -1.0)], 2)

    def test_hub_ids(self):
        Y = assemble_admittance([AcLine("l", "x", "y", 1.0, -2.0, 1.0)], ["y", "x"])
        assert Y.G[1, 0] == -1.0 and Y.hub_ids == ("y", "x")

    @given(st.integers(2, 8).flatmap(lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1),
                           st.floats(-50, 50), st.floats(-50, 50)), max_size=20))))
    def test_rows_sum_to_zero_and_symmetric(self, data):
        n, raw = data
        lines = [_line(a, b, g, bb) for a, b, g, bb in raw if a != b]
        Y = assemble_admittance(lines, n)
        for M in (Y.G, Y.B):
            assert np.allclose(M.sum(axis=1), 0.0, atol=1e-9)
            assert np.array_equal(M, M.T)


class TestPerUnit:
    def test_division_by_base(self):
        case = toy_case()
        pu = to_per_unit(case)
        assert pu.per_unit
        assert pu.turbines[0].p_max == pytest.approx(2.0)
        inv_case = toy_case(battery=True)
        assert to_per_unit(inv_case).inverters[0].p_max == pytest.approx(2.0)

    def test_120_kw(self):
        case = toy_case(battery=True)
        inv = dataclasses.replace(case.inverters[0], p_max=120.0)
        pu = to_per_unit(dataclasses.replace(case, inverters=(inv,)))
        assert pu.inverters[0].p_max == pytest.approx(1.2)

    def test_gas_left_physical(self):
        case = toy_case()
        pu = to_per_unit(case)
        assert pu.pipes == case.pipes and pu.suppliers == case.suppliers

    def test_fuel_curve_follows_units(self):
        case = toy_case()
        pu = to_per_unit(case)
        # 150 kW is 1.5 p.u.; the fuel drawn must not change
        assert pu.turbines[0].fuel_curve(1.5) == pytest.approx(case.turbines[0].fuel_curve(150.0))

    def test_roundtrip_fixture(self, bundled):
        case = bundled["case1"]
        back = from_per_unit(to_per_unit(case))
        for (p1, a), (p2, b) in zip(numeric_fields(case), numeric_fields(back)):
            assert p1 == p2
            assert b == pytest.approx(a, rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize("kva", [0.0, -100.0])
    def test_bad_base(self, kva):
        case = dataclasses.replace(toy_case(), base=PerUnitBase(kva, 1.0))
        with pytest.raises(ValueError):
            to_per_unit(case)

    @given(random_cases(), st.floats(1.0, 10000.0))
    def test_roundtrip_random(self, case, kva):
        case = dataclasses.replace(case, base=PerUnitBase(kva, 1.0))
        back = from_per_unit(to_per_unit(case))
        for (p1, a), (_, b) in zip(numeric_fields(case), numeric_fields(back)):
            assert b == pytest.approx(a, rel=1e-12, abs=1e-12), p1
