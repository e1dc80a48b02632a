"""Collects the one-line verdicts recorded by the acceptance tests and
prints them at the end of the session."""

_LINES = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _LINES.extend(v for k, v in report.user_properties if k == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
