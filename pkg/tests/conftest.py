"""Collects acceptance results and prints one verdict line per criterion."""

import re
from collections import OrderedDict

_RESULTS = OrderedDict()
_NAME = re.compile(r"test_c(\d+)_")


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = report.nodeid.split("::")[-1]
    m = _NAME.match(name)
    if not m or "supplementary" in name:
        return
    _RESULTS.setdefault(int(m.group(1)), []).append((name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_RESULTS):
        parts = _RESULTS[crit]
        failed = [n for n, ok in parts if not ok]
        verdict = "PASS" if not failed else "FAIL"
        detail = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {crit:2d}: {verdict}  [{len(parts) - len(failed)}/{len(parts)} checks]{detail}")
