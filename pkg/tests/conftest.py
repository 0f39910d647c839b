import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from nsacdg.thermo import MixtureParams, PhaseEOS, convergence_params  # noqa: E402


@pytest.fixture
def params():
    return convergence_params()


@pytest.fixture
def energy_params():
    return MixtureParams(PhaseEOS(5.0, -4.0, 11.0), PhaseEOS(1.5, 1.8, 0.324), a=6.25e-5,
                         gamma=5e-4, eta=10.0, nu_liquid=0.0125, nu_vapor=0.00125)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(LINES, key=lambda k: (int(k.split(".")[0]), k)):
            terminalreporter.write_line(LINES[key])
