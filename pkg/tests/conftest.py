import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one PASS/FAIL (or INFO) line for the terminal summary."""

    def report(criterion, ok, text):
        tag = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        ACCEPTANCE_LINES.append(f"[{tag}] {criterion}: {text}")

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
