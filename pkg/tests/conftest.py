import numpy as np
import pytest

from src.models.schemas import AdatomSpec, SubstrateKind, SubstrateSpec
from src.physics.resonance import find_pole
from src.utils.console import console


@pytest.fixture(autouse=True)
def _quiet_console():
    console.quiet = True
    yield
    console.quiet = False


@pytest.fixture(scope="session")
def square_spec() -> AdatomSpec:
    """정사각 격자, ε₀/V = 2, V₀/V = 0.4"""
    return AdatomSpec(epsilon0=2.0, v0=0.4, substrate=SubstrateSpec())


@pytest.fixture(scope="session")
def chain_spec() -> AdatomSpec:
    """반무한 사슬 밴드 중심, V₀/V = 0.4"""
    return AdatomSpec(
        epsilon0=0.0,
        v0=0.4,
        substrate=SubstrateSpec(kind=SubstrateKind.SEMI_INFINITE_CHAIN),
    )


@pytest.fixture(scope="session")
def square_res(square_spec):
    return find_pole(square_spec)


@pytest.fixture(scope="session")
def chain_res(chain_spec):
    return find_pole(chain_spec)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
