import pytest

from h2df_rlmpc.neural_plant import NeuralPlant
from oracles import LinearPlant


@pytest.fixture
def linear_plant():
    return LinearPlant()


@pytest.fixture(scope="session")
def random_model():
    return NeuralPlant.initialized(seed=3)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines.items()):
            terminalreporter.write_line(line)
