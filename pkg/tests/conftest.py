"""Acceptance-criteria bookkeeping shared by the whole suite."""

import pytest

_CRITERIA: dict[int, bool] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(n): ties a test to a numbered acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if report.when == "call":
        _CRITERIA[n] = _CRITERIA.get(n, True) and report.passed
    elif report.outcome != "passed":
        # setup or teardown error counts against the criterion
        _CRITERIA[n] = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        verdict = "PASS" if _CRITERIA[n] else "FAIL"
        terminalreporter.write_line(f"acceptance criterion {n}: {verdict}")
