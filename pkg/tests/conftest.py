import pytest

from smsnystrom.generators import (
    FLAT_NEAR_PSD_PROFILE,
    TOP_HEAVY_NEAR_PSD_PROFILE,
    planted_profile,
    random_psd,
)


@pytest.fixture(scope="session")
def flat_planted():
    """1000 x 1000, 90% of eigenvalues in [0.5, 1], 10% in [-0.1, -0.001]."""
    return planted_profile(1000, FLAT_NEAR_PSD_PROFILE, 0)


@pytest.fixture(scope="session")
def top_heavy_planted():
    """1000 x 1000 near-PSD matrix with a decaying spectrum and 10% negatives."""
    return planted_profile(1000, TOP_HEAVY_NEAR_PSD_PROFILE, 0)


@pytest.fixture(scope="session")
def psd_1000():
    return random_psd(1000, 0)

