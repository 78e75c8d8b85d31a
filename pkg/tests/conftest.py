import numpy as np
import pytest

from photonic_imc.calibration import builtin_profile
from photonic_imc.device_cell import FIG4
from photonic_imc.noise import NoiseModel


@pytest.fixture
def cal():
    return FIG4


@pytest.fixture
def profile():
    return builtin_profile("fig4")


@pytest.fixture
def quiet():
    return NoiseModel.off()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
