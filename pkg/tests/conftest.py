import pytest

from shrinklab import IntegratorConfig, PhysConsts, ProfileState, integrate


@pytest.fixture(scope="session")
def consts_sim() -> PhysConsts:
    """Constant set used throughout the simulation campaign."""
    return PhysConsts(c_v=1.0, r_gas=1.0, kappa=1.0, mu=2.0, lam=1.0, d=3)


@pytest.fixture(scope="session")
def consts_d1() -> PhysConsts:
    return PhysConsts(c_v=1.0, r_gas=1.0, kappa=1.0, mu=1.0, lam=0.0, d=1)


@pytest.fixture(scope="session")
def stationary_traj(consts_sim):
    state = ProfileState(r=1e-3, p=1.0, u=0.0, v=0.0, theta=0.0, s=0.0)
    return integrate(state, consts_sim, IntegratorConfig())
