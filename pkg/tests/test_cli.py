import csv
import dataclasses
import io
import subprocess
import sys

import pytest

from mecgrid.cli import main
from mecgrid.fixtures import bundled_path
from mecgrid.io import save_case
from mecgrid.report import FIGURES

from cases import toy_case


def run(argv):
    buf = io.StringIO()
    code = main(argv, out=buf)
    return code, buf.getvalue()


@pytest.fixture
def toy_file(tmp_path):
    path = tmp_path / "toy.json"
    save_case(toy_case(horizon=3, demand=60.0, battery=True), path)
    return path


class TestValidate:
    def test_bundled_ok(self):
        code, text = run(["validate", "--input", str(bundled_path("case1"))])
        assert code == 0
        assert "6 AC hubs, 5 DC hubs" in text

    def test_invalid_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        code, _ = run(["validate", "--input", str(bad)])
        assert code == 2
        assert "mecgrid: " in capsys.readouterr().err


class TestUsage:
    def test_plan_without_input(self, tmp_path, capsys):
        code, _ = run(["plan", "--out", str(tmp_path)])
        assert code == 2
        err = capsys.readouterr().err
        assert "usage:" in err and "--input" in err

    def test_no_command(self, capsys):
        assert run([])[0] == 2

    @pytest.mark.parametrize("flag", [["--segments", "0"], ["--gap", "-1"], ["--gap", "x"]])
    def test_bad_numbers(self, toy_file, tmp_path, flag):
        assert run(["plan", "--input", str(toy_file), "--out", str(tmp_path)] + flag)[0] == 2

    def test_unknown_backend(self, toy_file, tmp_path, capsys):
        code, _ = run(["plan", "--input", str(toy_file), "--out", str(tmp_path / "o"),
                       "--backend", "nope"])
        assert code == 2
        assert "nope" in capsys.readouterr().err

    def test_bad_sweep_path(self, toy_file, tmp_path, capsys):
        code, _ = run(["sweep", "--input", str(toy_file), "--param", "inverters[5].p_max",
                       "--values", "1", "--out", str(tmp_path)])
        assert code == 2

    def test_bad_sweep_values(self, toy_file, tmp_path):
        code, _ = run(["sweep", "--input", str(toy_file), "--param", "inverters[0].p_max",
                       "--values", "1,,x", "--out", str(tmp_path)])
        assert code == 2

    def test_version(self, capsys):
        assert run(["--version"])[0] == 0
        assert "0.1.0" in capsys.readouterr().out


class TestPlan:
    def test_writes_results(self, toy_file, tmp_path):
        out = tmp_path / "out"
        code, text = run(["plan", "--input", str(toy_file), "--out", str(out)])
        assert code == 0
        assert text.splitlines()[0] == "status optimal"
        assert {p.name for p in out.iterdir()} == {"schedule.csv", "flows.csv", "battery.csv",
                                                    "metrics.json", "case.json"}

    def test_deterministic(self, toy_file, tmp_path):
        first = run(["plan", "--input", str(toy_file), "--out", str(tmp_path / "o")])
        files = {p.name: p.read_bytes() for p in (tmp_path / "o").iterdir()}
        second = run(["plan", "--input", str(toy_file), "--out", str(tmp_path / "o")])
        assert first == second
        assert files == {p.name: p.read_bytes() for p in (tmp_path / "o").iterdir()}

    def test_backends_agree(self, toy_file, tmp_path):
        a = run(["plan", "--input", str(toy_file), "--out", str(tmp_path / "a")])
        b = run(["plan", "--input", str(toy_file), "--out", str(tmp_path / "b"),
                 "--backend", "highs"])
        obj = [next(l for l in r[1].splitlines() if l.startswith("objective")) for r in (a, b)]
        assert float(obj[0].split()[1]) == pytest.approx(float(obj[1].split()[1]), rel=1e-6)

    def test_env_backend(self, toy_file, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("MECGRID_BACKEND", "nope")
        code, _ = run(["plan", "--input", str(toy_file), "--out", str(tmp_path)])
        assert code == 2

    def test_infeasible_exit_1(self, tmp_path, capsys):
        case = toy_case(horizon=2)
        # the turbine's minimum output needs more fuel than the pipe carries
        gen = dataclasses.replace(case.turbines[0], p_min=150.0)
        pipe = dataclasses.replace(case.pipes[0], f_max=1.0)
        path = tmp_path / "tight.json"
        save_case(dataclasses.replace(case, turbines=(gen,), pipes=(pipe,)), path)
        code, _ = run(["plan", "--input", str(path), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "infeasible" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()


class TestSweep:
    def test_three_rows(self, tmp_path):
        code, text = run(["sweep", "--input", str(bundled_path("case1")),
                          "--param", "inverters[0].p_max", "--values", "120,100,80",
                          "--out", str(tmp_path)])
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(text)))
        assert [r["value"] for r in rows] == ["120", "100", "80"]
        assert all(r["status"] == "optimal" for r in rows)
        assert (tmp_path / "sweep.csv").read_text() == text


class TestReport:
    def test_after_plan(self, toy_file, tmp_path):
        out = tmp_path / "o"
        assert run(["plan", "--input", str(toy_file), "--out", str(out)])[0] == 0
        code, text = run(["report", "--out", str(out)])
        assert code == 0
        plots = out / "plots"
        assert (plots / "plots.gp").exists() and (plots / "summary.csv").exists()
        script = (plots / "plots.gp").read_text()
        for name, _, _ in FIGURES:
            assert (plots / f"{name}.csv").exists(), name
            assert f"{name}.csv" in script
        assert len(text.splitlines()) == len(FIGURES) + 2

    def test_without_plan(self, tmp_path, capsys):
        assert run(["report", "--out", str(tmp_path)])[0] == 2
        assert "mecgrid: " in capsys.readouterr().err


def test_module_entry_point(toy_file):
    res = subprocess.run([sys.executable, "-m", "mecgrid.cli", "validate", "--input",
                          str(toy_file)], capture_output=True, text=True)
    assert res.returncode == 0 and "ok" in res.stdout
