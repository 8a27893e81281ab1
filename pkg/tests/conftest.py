import numpy as np
import pytest

from pacemarket import MarketInstance, normalize_market
from pacemarket.market import QUASILINEAR


def random_linear_market(n, m, seed, value_scale=1.0):
    rng = np.random.default_rng(seed)
    V = rng.uniform(0.0, 1.0, size=(n, m)) * value_scale
    budgets = rng.uniform(0.5, 1.5, size=n)
    return normalize_market(budgets, V, np.ones(m), "linear")


def random_ceei_market(n, m, seed, value_scale=1.0):
    rng = np.random.default_rng(seed)
    V = rng.uniform(0.0, 1.0, size=(n, m)) * value_scale
    return normalize_market(np.ones(n), V, np.ones(m), "linear")


def random_ql_market(n, m, seed, value_scale=1.0):
    rng = np.random.default_rng(seed)
    V = rng.uniform(0.0, 1.0, size=(n, m)) * value_scale
    return normalize_market(np.ones(n), V, np.ones(m), QUASILINEAR)


@pytest.fixture
def complementary_market() -> MarketInstance:
    return normalize_market([1.0, 1.0], [[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], "linear")


@pytest.fixture
def identical_market() -> MarketInstance:
    return normalize_market([1.0, 1.0], [[1.0, 1.0], [1.0, 1.0]], [1.0, 1.0], "linear")
