import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Timing-based deadlines are flaky on shared CI boxes; keep the example
# counts but drop the per-example stopwatch.
settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
