import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            number, title = mark.args
            _CRITERIA.setdefault(number, {"title": title, "outcomes": []})


def pytest_runtest_logreport(report):
    if report.when != "call" and not report.failed:
        return
    found = re.search(r"::TestCriterion(\d+)::", report.nodeid)
    if found and int(found.group(1)) in _CRITERIA:
        _CRITERIA[int(found.group(1))]["outcomes"].append(
            (report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        outcomes = entry["outcomes"]
        if not outcomes:
            status = "NOT RUN"
        elif all(o == "passed" for _, o in outcomes):
            status = "PASS"
        else:
            status = "FAIL"
        failed = [name for name, o in outcomes if o != "passed"]
        extra = f"  [failing: {', '.join(failed)}]" if failed else ""
        tr.write_line(f"criterion {number}: {status}  {entry['title']}{extra}")
