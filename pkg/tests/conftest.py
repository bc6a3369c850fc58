"""Shared fixtures plus the acceptance report: every test marked
criterion(n, title) feeds one PASS/FAIL line printed after the run.
"""

import json
import os

import pytest

_titles = {}
_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, title): acceptance criterion; reported one line per "
        "criterion at the end of the run",
    )


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            num, title = mark.args
            _titles[num] = title
            item._criterion_num = num


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    num = getattr(item, "_criterion_num", None)
    if num is not None:
        if report.when == "call":
            _outcomes[num] = report.outcome
        elif report.when == "setup" and report.outcome != "passed":
            _outcomes[num] = report.outcome
    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _titles:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_titles):
        outcome = _outcomes.get(num, "not run")
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(
            outcome, outcome.upper()
        )
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {_titles[num]}")


@pytest.fixture(scope="session")
def baselines():
    path = os.path.join(os.path.dirname(__file__), "data", "acceptance_baselines.json")
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
