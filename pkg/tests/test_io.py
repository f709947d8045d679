import dataclasses
import json

import pytest
from hypothesis import given, settings

from mecgrid.analysis import solve_case
from mecgrid.fixtures import BUILDERS, bundled_path
from mecgrid.io import (CaseFileError, case_to_dict, fmt, metrics_json, parse_case,
                        parse_case_text, serialize_case, write_results)
from mecgrid.model import numeric_fields

from cases import random_cases, toy_case


class TestParse:
    def test_case1_layout(self, bundled):
        c = bundled["case1"]
        counts = (len(c.ac_hubs), len(c.dc_hubs), len(c.turbines), len(c.inverters),
                  len(c.pipes), len(c.suppliers))
        assert counts == (6, 5, 2, 2, 5, 1)
        # two DC-side turbines, 12 electrical lines, six gas hubs, supplier at gas hub 3
        assert {g.network for g in c.turbines} == {"dc"}
        assert len(c.ac_lines) + len(c.dc_lines) == 12
        assert len(c.gas_hubs) == 6 and c.suppliers[0].gas_hub == "3"
        assert sorted(r.kind for r in c.renewables) == ["solar", "wind"]
        assert [i.p_max for i in c.inverters] == [120.0, 120.0]
        assert sum(g.p_max for g in c.turbines) == 300.0

    @given(random_cases())
    @settings(max_examples=60)
    def test_roundtrip(self, case):
        back = parse_case_text(serialize_case(case))
        assert back == case
        for (p, a), (_, b) in zip(numeric_fields(case), numeric_fields(back)):
            assert a == b, p

    def test_short_profile_named(self):
        d = case_to_dict(toy_case(horizon=24, demand=10.0))
        d["ac_hubs"][1]["demand_p_kw"] = d["ac_hubs"][1]["demand_p_kw"][:23]
        with pytest.raises(CaseFileError, match=r"ac_hubs\[1\]\.demand_p_kw.*23.*24"):
            parse_case_text(json.dumps(d))

    def test_syntax_error_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "schema": 1,\n  "horizon": ,\n}\n')
        with pytest.raises(CaseFileError, match=r"bad\.json:3:\d+:"):
            parse_case(path)

    def test_unknown_field_named(self):
        d = case_to_dict(toy_case())
        d["ac_hubs"][0]["colour"] = "red"
        with pytest.raises(CaseFileError, match=r"ac_hubs\[0\]: unknown field 'colour'"):
            parse_case_text(json.dumps(d))

    def test_unknown_top_level(self):
        d = case_to_dict(toy_case())
        d["extras"] = {}
        with pytest.raises(CaseFileError, match="extras"):
            parse_case_text(json.dumps(d))

    def test_schema_version(self):
        d = case_to_dict(toy_case())
        d["schema"] = 2
        with pytest.raises(CaseFileError, match="schema"):
            parse_case_text(json.dumps(d))

    def test_validation_delegated(self):
        d = case_to_dict(toy_case())
        d["turbines"][0]["hub"] = "nowhere"
        with pytest.raises(CaseFileError) as info:
            parse_case_text(json.dumps(d))
        assert info.value.report is not None and not info.value.report.ok
        assert "'nowhere'" in str(info.value)

    def test_wrong_type(self):
        d = case_to_dict(toy_case())
        d["ac_lines"][0]["g_pu"] = "two"
        with pytest.raises(CaseFileError, match=r"ac_lines\[0\]\.g_pu"):
            parse_case_text(json.dumps(d))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CaseFileError, match="nope.json"):
            parse_case(tmp_path / "nope.json")

    def test_unit_suffixed_names(self, bundled):
        text = bundled_path("case1").read_text()
        for name in ("p_max_kw", "f_max_skcf_hr", "demand_p_kw", '"schema": 1'):
            assert name in text


class TestFixtures:
    @pytest.mark.parametrize("name", ["case1", "case2", "case3"])
    def test_files_match_builders(self, bundled, name):
        assert bundled[name] == BUILDERS[name]()
        assert bundled_path(name).read_text() == serialize_case(BUILDERS[name]())

    @pytest.mark.parametrize("name", ["case2", "case3"])
    def test_one_field_from_case1(self, bundled, name):
        base = {p: v for p, v in numeric_fields(bundled["case1"])}
        other = {p: v for p, v in numeric_fields(bundled[name])}
        assert base.keys() == other.keys()
        changed = {p.split("[")[0] + "." + p.rsplit(".", 1)[-1]
                   for p in base if base[p] != other[p]}
        assert len(changed) == 1
        if name == "case2":
            assert [p for p in base if base[p] != other[p]] == ["inverters[0].p_max"]
            assert other["inverters[0].p_max"] == 80.0
        else:
            assert changed == {"pipes.f_max"}
            assert {v for p, v in other.items() if p.endswith(".f_max")
                    and p.startswith("pipes")} == {20.0}

    def test_described_as_synthetic(self, bundled):
        assert "synthetic" in bundled["case1"].description.lower()


@pytest.fixture(scope="module")
def toy_result():
    res = solve_case(toy_case(horizon=3, demand=60.0, battery=True))
    assert res.status == "optimal"
    return res


class TestWriteResults:
    def test_case1_battery_rows(self, solved, tmp_path):
        r = solved["case1"]
        write_results(r.case, r.schedule, r.metrics, tmp_path)
        lines = (tmp_path / "battery.csv").read_text().split("\n")
        assert lines[-1] == ""
        assert len(lines[:-1]) == 25
        assert lines[0] == "hour,battery,e_kwh,p_ch_kw,p_dc_kw"

    def test_rerun_is_byte_identical(self, toy_result, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        files_a = write_results(toy_result.case, toy_result.schedule, toy_result.metrics, a)
        again = solve_case(toy_result.case)
        write_results(again.case, again.schedule, again.metrics, b)
        names = sorted(p.name for p in files_a)
        assert names == ["battery.csv", "case.json", "flows.csv", "metrics.json",
                         "schedule.csv"]
        for n in names:
            assert (a / n).read_bytes() == (b / n).read_bytes(), n

    def test_lf_only_and_no_temp_files(self, toy_result, tmp_path):
        write_results(toy_result.case, toy_result.schedule, toy_result.metrics, tmp_path)
        for p in tmp_path.iterdir():
            assert not p.name.startswith(".")
            assert b"\r" not in p.read_bytes()

    def test_metrics_keys(self, toy_result):
        d = json.loads(metrics_json(toy_result.metrics))
        assert set(d) == {f.name for f in dataclasses.fields(toy_result.metrics)}
        assert list(d) == sorted(d)

    def test_case_json_reparses(self, toy_result, tmp_path):
        write_results(toy_result.case, toy_result.schedule, toy_result.metrics, tmp_path)
        assert parse_case(tmp_path / "case.json") == toy_result.case

    def test_path_through_a_file(self, toy_result, tmp_path):
        # a regular file cannot hold children, whoever runs the tests
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        target = blocker / "out"
        with pytest.raises(OSError, match="blocker"):
            write_results(toy_result.case, toy_result.schedule, toy_result.metrics, target)


class TestFmt:
    @pytest.mark.parametrize("v, s", [(0.0, "0"), (-0.0, "0"), (-1e-20, "-1e-20"), (3, "3"),
                                      (1.0 / 3, "0.3333333333"), (120.0, "120")])
    def test_values(self, v, s):
        assert fmt(v) == s
