import os
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pairsplit.coupler import SplittingSpectrum
from pairsplit.source import SourceParams, calibrate_asymmetry, generate_state

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = os.path.join(os.path.dirname(__file__), "..", "src", "pairsplit", "data")
TARGET_V = 0.89


@pytest.fixture(scope="session")
def params():
    return SourceParams.for_bandwidth()


@pytest.fixture(scope="session")
def symmetric_state(params):
    return generate_state(params)


@pytest.fixture(scope="session")
def calibrated_delta(params):
    return calibrate_asymmetry(TARGET_V, params)


@pytest.fixture(scope="session")
def calibrated_state(params, calibrated_delta):
    return generate_state(replace(params, delta=calibrated_delta))


@pytest.fixture(scope="session")
def device_spectrum():
    return SplittingSpectrum.from_csv(os.path.join(DATA, "splitting_L1080um.csv"))


def small_state(points=256, delta=0.0, dk1=None):
    """Coarse state for property tests."""
    base = SourceParams.for_bandwidth()
    p = replace(base, delta=delta, dk1=dk1 if dk1 is not None else base.dk1)
    return generate_state(p, points=points)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(criterion: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} {criterion}: {detail}")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {key}: {detail}")
