import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from photonic_qml import data

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def synth_split():
    """synth_dataset(2000, 0.3, 7) with the default 80:10:10 stratified split."""
    ds = data.synth_dataset(2000, 0.3, 7)
    sp = data.split_dataset(ds.y, (80, 10, 10), 7, True)
    return {k: ds.subset(v) for k, v in sp.sets().items()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
