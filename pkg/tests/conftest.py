import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from berryem.constants import thz_to_rad
from berryem.media import NonlocalParams, PlasmaParams

settings.register_profile("berryem", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "berryem"))


@pytest.fixture
def biased():
    """ωp/2π = 10 THz, ωc/ωp = 0.2."""
    return PlasmaParams.from_thz(10.0, 2.0)


@pytest.fixture
def unbiased():
    return PlasmaParams.from_thz(10.0, 0.0)


@pytest.fixture
def regularized(biased):
    return NonlocalParams.from_ratio(biased, 100.0)


@pytest.fixture
def qcase():
    """ω/2π = 10 THz on a plasma with ωp/2π = 9 THz, ωc/2π = 1.73 THz."""
    return PlasmaParams.from_thz(9.0, 1.73), thz_to_rad(10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
