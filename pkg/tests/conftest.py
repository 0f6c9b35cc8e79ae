"""Collects acceptance-criterion outcomes and prints one line per criterion."""
from collections import OrderedDict

import pytest

_CRITERIA: "OrderedDict[str, dict]" = OrderedDict()


def _entry(item):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return None
    number, title = mark.args
    fresh = {"title": title, "passed": 0, "failed": 0, "seconds": 0.0, "notes": []}
    return _CRITERIA.setdefault(str(number), fresh)


@pytest.fixture
def note(request):
    """Attach a measured value to the summary line of the test's criterion."""
    entry = _entry(request.node)
    return (lambda text: entry["notes"].append(text)) if entry is not None else (lambda text: None)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    entry = _entry(item)
    if entry is None:
        return
    entry["seconds"] += report.duration
    if report.failed:
        entry["failed"] += 1
    elif report.when == "call" and report.passed:
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA, key=lambda s: (len(s), s)):
        e = _CRITERIA[number]
        status = "PASS" if e["failed"] == 0 and e["passed"] > 0 else "FAIL"
        terminalreporter.write_line(
            f"criterion {number}: {status}  {e['title']}  "
            f"({e['passed']} passed, {e['failed']} failed, {e['seconds']:.1f}s)"
        )
        for text in e["notes"]:
            terminalreporter.write_line(f"    {text}")
