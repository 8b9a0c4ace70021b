import pytest

from solgas.elliptic import AsymptoticProfile
from solgas.geometry import EllipseDomain, SolitonDensity


@pytest.fixture(scope="session")
def domain():
    return EllipseDomain(0.5, 1.5, 0.75)


@pytest.fixture(scope="session")
def beta():
    return SolitonDensity.constant(1.0)


@pytest.fixture(scope="session")
def profile(domain, beta):
    """One profile for the whole session: construction re-derives every
    asymptotic constant, so sharing it keeps the elliptic tests quick."""
    return AsymptoticProfile(domain, beta)
