"""Collects acceptance results and prints one PASS/FAIL line per criterion."""

import pytest

_RESULTS: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    num, title = marker.args
    entry = _RESULTS.setdefault(num, {"title": title, "passed": True, "failed": [], "details": []})
    if not report.passed:
        entry["passed"] = False
        entry["failed"].append(item.name)
    entry["details"] += [str(v) for k, v in report.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_RESULTS):
        entry = _RESULTS[num]
        status = "PASS" if entry["passed"] else "FAIL"
        tr.write_line(f"criterion {num:2d} {status}: {entry['title']}")
        for d in entry["details"]:
            tr.write_line(f"    {d}")
        for name in entry["failed"]:
            tr.write_line(f"    failed: {name}")
