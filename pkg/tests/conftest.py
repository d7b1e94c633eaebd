from __future__ import annotations

_LINES: list[str] = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _LINES.extend(v for k, v in report.user_properties if k == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
