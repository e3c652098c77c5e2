import numpy as np
import pytest

from pusch_isac.grid import SlotConfig

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_slot():
    return SlotConfig(num_subcarriers=16, num_symbols=8)


@pytest.fixture(scope="session")
def slot():
    return SlotConfig()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
