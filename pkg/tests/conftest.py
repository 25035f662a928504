from pathlib import Path

import numpy as np
import pytest

from leafqueue import DEFAULT_RATES, ModelKind

DATA = Path(__file__).parent / "data"

# filled by test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def load_golden(tag):
    rows = np.loadtxt(DATA / f"golden_{tag}_marginal.csv", delimiter=",", skiprows=1)
    return rows[:, 1]


@pytest.fixture(scope="session")
def gbn():
    return ModelKind("gbn")


@pytest.fixture(scope="session")
def lnl():
    return ModelKind("lnl")


@pytest.fixture(scope="session")
def finite():
    return ModelKind("finite")


@pytest.fixture(scope="session")
def simple():
    return ModelKind("simple")


@pytest.fixture(scope="session")
def gbn_rates():
    return DEFAULT_RATES["gbn"]


@pytest.fixture(scope="session")
def finite_rates():
    return DEFAULT_RATES["finite"]
