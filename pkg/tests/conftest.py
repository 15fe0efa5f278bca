import numpy as np
import pytest

from qsrsr.io import load_fixture

ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def ex():
    return {k: load_fixture(k) for k in ("ex1", "ex2", "ex3", "ex4")}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
