import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from humplab.errors import HuntFailure
from humplab.hunter import HuntConfig, hunt

settings.register_profile(
    "lab",
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("lab")

# seeds whose hunted pair has a splitting of at least 3e-3 (Rabi period below ~2100)
POOL_CFG = HuntConfig(min_gap=0.003)


@pytest.fixture(scope="session")
def pair():
    return hunt(0, POOL_CFG)


@pytest.fixture(scope="session")
def pairs():
    found, seed = [], 0
    while len(found) < 5:
        try:
            found.append(hunt(seed, POOL_CFG))
        except HuntFailure:
            pass
        seed += 1
    return found


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def record_acceptance(number: int, name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"AC{number:<2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
