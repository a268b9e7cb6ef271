import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DELTAS = (-0.5, 0.0, 1.0)

_acceptance: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the test still asserts on its own."""

    def record(name: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        print(line)
        _acceptance.append((name, ok, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in _acceptance:
        terminalreporter.write_line(line)
