import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# filled by test_acceptance; echoed after the run so the verdicts survive output capture
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
