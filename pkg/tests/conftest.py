import pytest
from hypothesis import HealthCheck, settings

import helpers
from helpers import blobs

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def imbalanced():
    """90/10 overlapping blobs."""
    return blobs((90, 10), ((0.0, 0.0), (1.5, 1.5)), seed=3)


@pytest.fixture
def separated():
    """90/10 blobs ten standard deviations apart."""
    return blobs((90, 10), ((0.0, 0.0), (10.0, 10.0)), seed=4)


def pytest_terminal_summary(terminalreporter):
    if not helpers.ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(helpers.ACCEPTANCE, key=lambda r: str(r[0])):
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
