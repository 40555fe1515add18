import numpy as np
import pytest

from gaborprop.cones import default_directions
from gaborprop.signals import builtin
from gaborprop.tfa import PhaseGrid, WindowSpec, decay_order

N1, L1 = 4096, 64.0
N2, L2 = 256, 16.0

BUILTINS_1D = {
    "delta": {"name": "delta"},
    "constant": {"name": "constant"},
    "plane_wave": {"name": "plane_wave", "xi0": 4.0},
    "chirp": {"name": "chirp", "a": 1.0},
    "chirp_neg": {"name": "chirp", "a": -1.0},
    "gaussian": {"name": "gaussian"},
}


def signal_1d(name):
    return builtin(BUILTINS_1D[name], N1, L1)


@pytest.fixture(scope="session")
def grid_1d():
    return PhaseGrid.for_signal(signal_1d("delta"))


@pytest.fixture(scope="session")
def reports_1d(grid_1d):
    """Decay-order reports for every 1-D builtin under both windows."""
    cache = {}

    def get(name, window="gaussian"):
        key = (name, window)
        if key not in cache:
            cache[key] = decay_order(signal_1d(name), WindowSpec(window), grid_1d)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def angle_deg(dirs):
    return np.degrees(np.arctan2(dirs[:, 1], dirs[:, 0]))


@pytest.fixture(scope="session")
def directions_2d():
    return default_directions(2)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
