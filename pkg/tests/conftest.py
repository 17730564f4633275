import numpy as np
import pytest

from earlyrisk.synth import CohortConfig, generate_cohort


@pytest.fixture(scope="session")
def small_cohort():
    """A 16-participant generated cohort shared by pipeline and CLI tests."""
    return generate_cohort(CohortConfig(seed=7, n_participants=16))


@pytest.fixture(scope="session")
def small_data(small_cohort):
    from earlyrisk.pipelines.data import cohort_to_data
    return cohort_to_data(small_cohort, "S")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
