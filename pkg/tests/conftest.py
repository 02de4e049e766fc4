import pytest

import sflow


@pytest.fixture(scope="session", autouse=True)
def _warm_eigensolver():
    # first jitted call pays compilation; keep it out of timed tests
    sflow.warmup()
