import pytest

_VERDICTS = {}


@pytest.fixture
def verdict(request):
    """Record one pass/fail line for an acceptance criterion and assert it."""

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _VERDICTS[request.node.nodeid] = line
        print(line)
        assert ok, detail

    return record


def pytest_runtest_logreport(report):
    # a criterion that errors before recording still gets a line
    if report.when == "call" and report.failed and "test_acceptance" in report.nodeid:
        _VERDICTS.setdefault(report.nodeid, f"FAIL  {report.nodeid.split('::')[-1]}: raised")
    if report.skipped and "test_acceptance" in report.nodeid:
        reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else "skipped"
        _VERDICTS.setdefault(report.nodeid, f"SKIP  {report.nodeid.split('::')[-1]}: {reason}")


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS.values():
            terminalreporter.write_line(line)
