import numpy as np
import pytest

import fluxread as fr


@pytest.fixture(scope="session")
def pp():
    return fr.PhysicalParams()


@pytest.fixture(scope="session")
def dp(pp):
    return fr.to_dimensionless(pp)


@pytest.fixture(scope="session")
def dp_uncoupled(pp):
    return fr.to_dimensionless(pp.with_(M=0.0))


@pytest.fixture(scope="session")
def spec0(dp):
    """Instantaneous spectrum at phi_r = 0, working values."""
    return fr.solve_spectrum(0.0, dp)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)
