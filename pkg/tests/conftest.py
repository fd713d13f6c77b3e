import pytest

# Root seed for every statistical test in the suite.  Tolerances are set at
# four sigma, so a seed change should essentially never flip a verdict; this
# value just pins the exact arithmetic.
GLOBAL_SEED = 20260814


@pytest.fixture
def seed():
    return GLOBAL_SEED
