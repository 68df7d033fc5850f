import numpy as np
import pytest

from whfactor import moebius_grid


@pytest.fixture(scope="session")
def grid():
    return moebius_grid(4096)


@pytest.fixture(scope="session")
def small_grid():
    return moebius_grid(1024)


def sqrt_c(a):
    return np.sqrt(np.asarray(a, dtype=complex))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    lines = [RESULTS[k] for k in sorted(k for k in RESULTS if isinstance(k, int))]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
