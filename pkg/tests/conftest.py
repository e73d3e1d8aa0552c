import numpy as np
import pytest

from lincs.algebra import H0, X0
from lincs.system import LinearSystemSpec


@pytest.fixture
def example_system():
    return LinearSystemSpec.example(rho=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_sl2(rng, scale=1.0):
    a, b, c = rng.uniform(-scale, scale, size=3)
    return np.array([[a, b], [c, -a]])


@pytest.fixture(scope="session")
def fitted_estimator():
    from lincs.control_sets import ControlSetEstimator

    return ControlSetEstimator().fit(LinearSystemSpec.from_matrices(H0, [X0], 0.1))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])
