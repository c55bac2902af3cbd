import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from garo.model import load_model  # noqa: E402

settings.register_profile("garo", max_examples=60, deadline=None)
settings.load_profile("garo")


@pytest.fixture(scope="session")
def franka():
    return load_model("franka")


@pytest.fixture(scope="session")
def planar2():
    return load_model("planar2")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def criterion():
    """Record, print and assert one acceptance criterion."""

    def check(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
