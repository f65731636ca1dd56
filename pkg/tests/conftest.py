import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_LINES: list[tuple[str, bool, str]] = []


class AcceptanceLog:
    """Collects one ``PASS``/``FAIL`` line per acceptance criterion."""

    def record(self, tag: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] {tag}: {detail}"
        print(line)
        _LINES.append((tag, passed, detail))


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for tag, passed, detail in sorted(_LINES, key=lambda r: int(r[0].split()[0].lstrip("AC"))):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {tag}: {detail}")
