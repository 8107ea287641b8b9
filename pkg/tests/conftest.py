import re

import pytest

N_CRITERIA = 10
_results = {}
_started = set()


@pytest.fixture
def report():
    """Record one acceptance line: report(n, ok, detail)."""

    def record(n, ok, detail):
        _results[n] = (bool(ok), detail)

    return record


def pytest_runtest_logstart(nodeid, location):
    m = re.search(r"test_acceptance\.py::test_c(\d+)_", nodeid)
    if m:
        _started.add(int(m.group(1)))


def pytest_terminal_summary(terminalreporter):
    if not _started:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n in _results:
            ok, detail = _results[n]
            line = f"{'PASS' if ok else 'FAIL'}  {detail}"
        elif n in _started:
            line = "FAIL  (errored before reporting)"
        else:
            line = "not run"
        terminalreporter.write_line(f"criterion {n:2d}: {line}")
