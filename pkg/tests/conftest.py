from fractions import Fraction

import numpy as np
import pytest

from martcob import fixtures
from martcob.space import random_function

ACCEPTANCE_LINES = []


@pytest.fixture
def b2():
    return fixtures.B2()


@pytest.fixture
def b2xb2():
    return fixtures.B2xB2()


@pytest.fixture
def m3():
    return fixtures.M3()


@pytest.fixture
def m3xb2():
    return fixtures.M3xB2()


@pytest.fixture(params=["b2", "b2xb2", "m3", "m3xb2"])
def any_system(request):
    return fixtures.build_system(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def randfn(system, window, rng):
    return random_function(system, window, rng)


H = Fraction(1, 2)
Q = Fraction(1, 4)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
