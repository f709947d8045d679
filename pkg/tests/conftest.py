import os

import pytest
from hypothesis import HealthCheck, settings

from mecgrid.analysis import solve_case
from mecgrid.fixtures import load_bundled

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(autouse=True)
def _reference_backend(monkeypatch):
    monkeypatch.delenv("MECGRID_BACKEND", raising=False)


@pytest.fixture(scope="session")
def bundled():
    return {name: load_bundled(name) for name in ("case1", "case2", "case3")}


@pytest.fixture(scope="session")
def solved(bundled):
    """Reference-engine solves of the three bundled cases, computed once."""
    return {name: solve_case(case, backend="reference") for name, case in bundled.items()}


# criterion number -> one-line verdict, filled in by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 10):
        terminalreporter.write_line(ACCEPTANCE.get(n, f"criterion {n}: FAIL (did not finish)"))
