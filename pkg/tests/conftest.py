import warnings

import numpy as np
import pytest

from katlind.fock import FockConfig

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def quiet_cfg(dim, k, alpha):
    """FockConfig without the below-guard-band warning (for deliberate small dims)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return FockConfig(dim, k, alpha)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
