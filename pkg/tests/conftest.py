"""Collects the acceptance outcomes and prints one line per criterion."""

import pytest

RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, text = marker.args
    detail = getattr(item, "criterion_detail", "")
    RESULTS[number] = (report.passed, text, detail)


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        passed, text, detail = RESULTS[number]
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {text}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
