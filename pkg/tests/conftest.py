import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from entrofv.cases import tpfa_mixed
from entrofv.mesh import generate_cartesian, generate_distorted_quad, generate_triangular

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cart4():
    return generate_cartesian(4, 4)


@pytest.fixture(scope="session")
def tri0():
    return generate_triangular(0)


@pytest.fixture(scope="session")
def tri0_mixed():
    return generate_triangular(0, dirichlet=tpfa_mixed().dirichlet)


@pytest.fixture(scope="session")
def quad8():
    return generate_distorted_quad(8, 0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
