import numpy as np
import pytest

from polyband.core import PolyBand

ACCEPTANCE_FILE = "test_acceptance.py"
_criteria = {}
_details = {}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def measured(request):
    """Record a one-line summary of the measured quantity for the acceptance report."""

    def record(text):
        _details[request.node.name] = text
        print(text)

    return record


@pytest.fixture
def rect_band():
    return PolyBand.rectangle(0.2, 0.2, 0.8, 0.8)


def pytest_runtest_logreport(report):
    if ACCEPTANCE_FILE in report.nodeid and (report.when == "call" or report.outcome == "failed"):
        name = report.nodeid.split("::")[-1]
        if report.when == "call" or name not in _criteria:
            _criteria[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_criteria.items(), key=lambda kv: int(kv[0].split("_")[2])):
        detail = _details.get(name, "")
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}  {detail}".rstrip())
