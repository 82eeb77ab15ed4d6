import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_addoption(parser):
    parser.addoption("--trials", action="store", type=int, default=None,
                     help="override trial counts in the heavy property suites")


@pytest.fixture
def trials(request):
    return request.config.getoption("--trials")
