import pytest

from carepath.synthetic import generate_cohort


@pytest.fixture(scope="session")
def small_cohort():
    """80 patients over the default archetype battery, anchored."""
    return generate_cohort(n_patients=80, seed=7)


@pytest.fixture(scope="session")
def midsize_cohort():
    """200 patients, enough structure for clustering and survival fits."""
    return generate_cohort(n_patients=200, seed=11)
