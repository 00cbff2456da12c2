"""Per-criterion pass/fail reporting for the acceptance suite.

Each acceptance test funnels its verdict through the ``criterion`` fixture,
which records one human-readable line.  The collected lines are replayed in
a dedicated terminal section after the run so the verdicts survive output
capturing.
"""

from __future__ import annotations

import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Report one acceptance criterion: record a line, print it, assert it."""

    def _report(num: int, name: str, ok: bool, detail: str) -> None:
        line = f"criterion {num:2d} {name}: {'PASS' if ok else 'FAIL'} [{detail}]"
        _LINES.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_LINES):
        terminalreporter.write_line(line)
