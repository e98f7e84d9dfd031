import numpy as np
import pytest

_LINES = {}


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    _LINES[number] = line
    print(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_LINES):
            terminalreporter.write_line(_LINES[number])
