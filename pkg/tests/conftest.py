import numpy as np
import pytest

from mixedfleet.market import MarketParams
from mixedfleet.network import DemandPattern, star_to_complete


@pytest.fixture(scope="session")
def star3() -> DemandPattern:
    """3-location star: hub 0 splits to 1 and 2, which both route back."""
    return star_to_complete(3, 0.0)


@pytest.fixture(scope="session")
def two_complete() -> DemandPattern:
    return DemandPattern(2, [[0.0, 1.0], [1.0, 0.0]], [1.0, 1.0])


def make_params(beta: float, k: float, omega: float = 1.0) -> MarketParams:
    return MarketParams.from_k(beta=beta, omega=omega, k=k)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
