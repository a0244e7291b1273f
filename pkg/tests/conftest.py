import numpy as np
import pytest

from tqsrecon import ReconstructionConfig, generate_pattern

_ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line; printed in the terminal summary."""
    def record(number, passed, detail):
        _ACCEPTANCE_LINES.append(
            f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def toy_pattern():
    return generate_pattern(seed=3, period=8, block_size=2)


@pytest.fixture(scope="session")
def toy_config():
    return ReconstructionConfig(window=8, block=2, n_iter=30, clip=False)


@pytest.fixture(scope="session")
def pattern32():
    return generate_pattern(seed=7, period=32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
