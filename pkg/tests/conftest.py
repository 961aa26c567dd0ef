import numpy as np
import pytest

from starmcf import FlowConfig, estimate_blowup_time, make_shape, run

FLOWER = {"eps": 0.3, "k": 3}


def blowup(preset, params, n, N, **kw):
    series = run(make_shape(preset, params, n, N), FlowConfig(t_end=10.0, **kw))
    return series, estimate_blowup_time(series)


@pytest.fixture(scope="session")
def circle_256():
    return blowup("round", {"R0": 1.0}, 1, 256)


@pytest.fixture(scope="session")
def sphere_256():
    return blowup("round", {"R0": 1.0}, 2, 256)


@pytest.fixture(scope="session")
def flower_128():
    return blowup("flower", FLOWER, 1, 128)


@pytest.fixture(scope="session")
def circle_64():
    return blowup("round", {"R0": 1.0}, 1, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
