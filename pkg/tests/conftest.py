"""Shared pytest wiring for the acceptance report.

Capture works at the file descriptor level, so a passing test cannot print
directly. The acceptance checks queue their one-line verdicts here and the
hook echoes them once the run is over.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
