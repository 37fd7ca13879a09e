import numpy as np
import pytest

from hmmsubspace.hmm import fixture, validate_model


@pytest.fixture(scope="session")
def a1c1():
    return fixture("a1c1")


@pytest.fixture(scope="session")
def a2c2():
    return fixture("a2c2")


@pytest.fixture(scope="session")
def a3c3():
    return fixture("a3c3")


@pytest.fixture(scope="session")
def uninformative():
    A = np.array([[0.9, 0.1], [0.1, 0.9]])
    C = np.array([[0.3, 0.3], [0.7, 0.7]])
    return validate_model(A, C, name="flat")


@pytest.fixture(params=["a1c1", "a2c2", "a3c3"])
def bundled(request):
    return fixture(request.param)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
