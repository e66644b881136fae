import mpmath
import pytest
from hypothesis import settings

mpmath.mp.dps = 50

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def mp():
    return mpmath
