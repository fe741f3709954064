import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from ccqid.randomness import noiseless_binary_channel, perfect_binary_code  # noqa: E402


@pytest.fixture
def noiseless():
    return noiseless_binary_channel()


@pytest.fixture
def perfect_code():
    return perfect_binary_code()


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240601))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", {}) if mod else {}
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
