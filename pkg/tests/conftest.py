import numpy as np
import pytest

from squeezelab import GaussianState, presets


@pytest.fixture(scope="session")
def matrix_states():
    return {pair: GaussianState.from_db(*pair) for pair in presets.MATRIX_STATES_DB}


@pytest.fixture(scope="session")
def reference_matrices():
    return presets.REFERENCE_MATRICES


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)
