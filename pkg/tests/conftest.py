import math

import pytest

from vortlyap.littlewood_paley import build_partition
from vortlyap.spectral import make_grid


@pytest.fixture(scope="session")
def grid():
    return make_grid(3, 32, 2 * math.pi)


@pytest.fixture(scope="session")
def grid16():
    return make_grid(3, 16, 2 * math.pi)


@pytest.fixture(scope="session")
def part(grid):
    return build_partition(grid)


@pytest.fixture(scope="session")
def part16(grid16):
    return build_partition(grid16)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
