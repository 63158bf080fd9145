import pytest

from cyrisk.scenario import builtin_ads_scenario

ACCEPTANCE_SEED = 12345


@pytest.fixture(scope="session")
def ads():
    return builtin_ads_scenario()


@pytest.fixture(scope="session")
def ads_ranking(ads):
    """Exhaustive ranking at the reference settings (M = V = 10 000, rho = 1e-7)."""
    from cyrisk.risk.decision import optimize
    return optimize(ads, rho=1e-7, M=10000, V=10000, seed=ACCEPTANCE_SEED)
