import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from bayescoint import _backend  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BACKENDS = ["python"]
try:
    from bayescoint import _kernels  # noqa: F401

    BACKENDS.append("compiled")
except ImportError:
    pass


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run a test once per available kernel backend."""
    previous = _backend.name
    _backend.use(request.param)
    yield request.param
    _backend.use(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def ar1_path(rng, t_len, phi, sigma2=1.0):
    eps = np.empty(t_len)
    eps[0] = rng.normal(0.0, np.sqrt(sigma2 / (1 - phi * phi))) if abs(phi) < 1 else 0.0
    for t in range(1, t_len):
        eps[t] = phi * eps[t - 1] + rng.normal(0.0, np.sqrt(sigma2))
    return eps


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance verdict lines collected during the run."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
