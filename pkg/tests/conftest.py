from pathlib import Path

import pytest

from chshear import TorusGrid

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "chshear" / "fixtures"

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def grid32():
    return TorusGrid(32, 32)


@pytest.fixture
def grid64():
    return TorusGrid(64, 64)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
