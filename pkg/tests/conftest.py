from __future__ import annotations

import pytest

_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Append ``(number, passed, text)`` to the per-criterion summary."""
    lines = request.config.stash.setdefault(_KEY, [])

    def log(number: int, passed: bool, text: str):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {text}"
        print(line)
        lines.append((number, line))
        return passed

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
