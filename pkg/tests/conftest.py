import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from diracverify.scenarios import get_scenario, run_scenario  # noqa: E402

_RUNS: dict = {}
_CRITERIA: list = []


def scenario_run(name: str, variant: int = 0, samples: int = 200, seed: int = 42):
    """Memoized default runs shared by the scenario and acceptance tests."""
    key = (name, variant, samples, seed)
    if key not in _RUNS:
        _RUNS[key] = run_scenario(get_scenario(name, variant), samples, seed)
    return _RUNS[key]


@pytest.fixture(scope="session")
def runs():
    return scenario_run


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.name.startswith("test_criterion_"):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _CRITERIA.append((item.name, doc, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, doc, ok in sorted(_CRITERIA, key=lambda c: int(c[0].split("_")[2])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {doc}")
