import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if report.passed and not hasattr(report, "wasxfail"):
            status = "PASS"
        elif hasattr(report, "wasxfail") and report.skipped:
            status = "FAIL (expected: " + report.wasxfail + ")"
        else:
            status = "FAIL"
        detail = getattr(item, "criterion_detail", "")
        CRITERIA[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, status, detail = CRITERIA[number]
        line = f"criterion {number:2d} {status.split(' ')[0]:4s} {title}"
        if detail:
            line += f"  [{detail}]"
        if status.startswith("FAIL ("):
            line += "  " + status[5:]
        terminalreporter.write_line(line)
