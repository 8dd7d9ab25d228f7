import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from shockmodel.distributions import DiscreteFinite
from shockmodel.model import AffineIncrements, FiniteIncrements, ModelParams

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# magnitudes of a 32-shock history with nu=32, W=16, N+=2, N-=2 under
# gamma=30, beta=40, alpha=45, b=(0,3,5), c=(0,4,7)
EXAMPLE_TRACE = (14, 11, 22, 25, 18, 34, 23, 19, 25, 37, 19, 28, 24, 16, 27, 42,
                16, 32, 28, 24, 22, 29, 33, 44, 25, 32, 18, 20, 29, 27, 33, 45)


@pytest.fixture
def example_params():
    return ModelParams(alpha=45, beta=40, gamma=30, b=FiniteIncrements((0, 3, 5)), c=FiniteIncrements((0, 4, 7)))


@pytest.fixture
def uniform5():
    f = DiscreteFinite((1, 2, 3, 4, 5), (0.2,) * 5)
    params = ModelParams(alpha=5, beta=4, gamma=3, b=AffineIncrements(1.0), c=AffineIncrements(0.5))
    return f, params


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
