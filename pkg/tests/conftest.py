import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import _acceptance_report


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criterion lines past the output capture."""
    if _acceptance_report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_report.LINES:
            terminalreporter.write_line(line)
