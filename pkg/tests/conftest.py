import pytest

from robust_pension.plan import BASELINE


@pytest.fixture(scope="session")
def baseline():
    return BASELINE
