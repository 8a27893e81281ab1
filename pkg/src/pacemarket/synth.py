"""Synthetic market instances for experiments and tests."""

from __future__ import annotations

import numpy as np

from .errors import RejectionOverflow
from .market import (
    LINEAR,
    FiniteItemSpace,
    MarketInstance,
    continuum_market,
    normalize_market,
)

KINDS = ("uniform", "infdim", "complementary", "identical", "adversarial")

# longer names accepted for compatibility with external configs
_ALIASES = {
    "uniform-random-finite": "uniform",
    "infdim-linear": "infdim",
    "adversarial-appendix": "adversarial",
}


def generate_synthetic(kind: str, n: int, m: int | None = None, seed: int = 0,
                       mode: str = LINEAR, value_scale: float = 1.0,
                       adversary_value: float | None = None) -> MarketInstance:
    """Build one of the named synthetic instances.

    uniform:        v_ij ~ U(0, value_scale), equal budgets, uniform supply,
                    then normalized for the requested mode.
    infdim:         continuum market with random normalized linear
                    valuations (slope ~ U(-1, 1)).
    complementary:  n buyers, n items, each buyer values only "her" item.
    identical:      all-ones valuations.
    adversarial:    the unnormalized starvation instance with m = n+1 items;
                    item 0 is worth 1 to everyone, item j >= 1 is worth
                    ``adversary_value`` (default n+1, must exceed n) to all
                    but one buyer.
    """
    kind = _ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}")
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        if m is None:
            raise ValueError("uniform markets need an item count m")
        V = rng.uniform(0.0, 1.0, size=(n, m)) * value_scale
        return normalize_market(np.ones(n), V, np.ones(m), mode)
    if kind == "infdim":
        slopes = np.empty(n)
        for i in range(n):
            for attempt in range(1000):
                c = rng.uniform(-1.0, 1.0)
                d = 1.0 - c / 2.0
                if d >= 0.0 and c + d >= 0.0:
                    slopes[i] = c
                    break
            else:
                raise RejectionOverflow("could not draw a nonnegative linear valuation")
        intercepts = 1.0 - slopes / 2.0
        return continuum_market(slopes, intercepts)
    if kind == "complementary":
        V = np.eye(n)
        return normalize_market(np.ones(n), V, np.ones(n), mode)
    if kind == "identical":
        if m is None:
            m = n
        V = np.ones((n, m))
        return normalize_market(np.ones(n), V, np.ones(m), mode)
    # adversarial: deliberately unnormalized
    M = float(adversary_value) if adversary_value is not None else float(n + 1)
    if M <= n:
        raise ValueError("adversary value must exceed the buyer count")
    V = np.full((n, n + 1), M)
    V[:, 0] = 1.0
    for j in range(1, n + 1):
        V[n - j, j] = 0.0
    return MarketInstance(
        budgets=np.ones(n),
        valuations=V,
        item_space=FiniteItemSpace(np.ones(n + 1)),
        mode=LINEAR,
        normalized=False,
    )


def adversarial_hindsight_equilibrium(n: int, adversary_value: float, horizon: int,
                                      target: int) -> dict:
    """Closed-form equilibrium of the realized adversarial arrival sequence.

    The hindsight market holds T/2 copies of item 0 and T/2 copies of the
    targeted buyer's worthless item. The targeted buyer takes all copies of
    item 0 (utility T/2); everyone else evenly splits the other item. The
    returned prices and utilities satisfy the static equilibrium conditions,
    which the test suite verifies independently.
    """
    if horizon % 2 != 0:
        raise ValueError("horizon must be even")
    T = horizon
    M = float(adversary_value)
    u_star = np.full(n, M * T / (2 * (n - 1)))
    u_star[target] = T / 2.0
    beta_star = 1.0 / u_star  # unit budgets
    price_common = 2.0 / T
    price_other = 2.0 * (n - 1) / T
    return {
        "target": target,
        "other_item": n - target,
        "u_star": u_star,
        "beta_star": beta_star,
        "price_common_item": price_common,
        "price_other_item": price_other,
    }
