import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("netarch", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("netarch")


@pytest.fixture(scope="session")
def linear0():
    from netarch import AttachmentFunction
    return AttachmentFunction.linear(0.0)
