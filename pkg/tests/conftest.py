import pytest

_LINES: list[str] = []


def _format(label, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}"


@pytest.fixture
def report():
    """Record one acceptance line; the test still asserts on ``ok`` itself."""

    def _report(label, ok, detail):
        line = _format(label, ok, detail)
        _LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
