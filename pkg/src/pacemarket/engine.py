"""First-price pacing auction loop.

Each arriving item is sold to the highest paced bid (lowest index on ties)
at the first-price rule. Buyers keep a running average of their gross
utility and reset their multiplier to the budget-to-average-utility ratio,
clamped to a mode-specific box. The loop is deterministic given the market,
the configuration and the arrival stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .arrivals import ArrivalStream, sample_iid_continuum, sample_iid_finite
from .errors import ModeMismatch, StreamExhausted
from .market import LINEAR, QUASILINEAR, MarketInstance


def default_initial_multipliers(market: MarketInstance, delta0: float) -> np.ndarray:
    """Midpoint of the admissible range: (B+1)/2 in linear mode, halfway
    between the quasilinear floor and 1 otherwise."""
    if market.mode == LINEAR:
        return (market.budgets + 1.0) / 2.0
    return (quasilinear_floor(market) + 1.0) / 2.0


def quasilinear_floor(market: MarketInstance) -> np.ndarray:
    """Lower multiplier bound B_i / (<v_i, s> + 2 B_i) for quasilinear markets."""
    B = market.budgets
    return B / (market.expected_values() + 2.0 * B)


def multiplier_box(market: MarketInstance, delta0: float) -> tuple[np.ndarray, np.ndarray]:
    if market.mode == LINEAR:
        return market.budgets / (1.0 + delta0), np.full(market.n, 1.0 + delta0)
    return quasilinear_floor(market), np.ones(market.n)


@dataclass
class PaceConfig:
    """Loop parameters.

    Attributes:
        horizon: number of auction steps to run.
        delta0: box-slack parameter; the linear clamp box is
            [B/(1+delta0), 1+delta0].
        beta_init: explicit initial multipliers, or None for the default rule.
        track_ledger: keep per-step (value, price) pairs for every buyer.
            Required for hindsight regret; O(n*T) memory.
    """

    horizon: int
    delta0: float = 0.05
    beta_init: np.ndarray | None = None
    track_ledger: bool = True

    def __post_init__(self):
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")


@dataclass
class StepObservation:
    """Record of one auction step."""

    t: int
    item: object
    values: np.ndarray
    bids: np.ndarray
    winner: int
    price: float
    net_utility: np.ndarray


@dataclass
class PaceState:
    """Mutable per-run state.

    ``g_bar`` is the running average gross utility (the dual average),
    ``b_bar`` the running average expenditure, ``u_bar`` the running average
    net utility (equal to ``g_bar`` in linear mode). ``cross_utility[i, k]``
    accumulates buyer i's value of everything buyer k has won.
    """

    t: int
    beta: np.ndarray
    g_bar: np.ndarray
    b_bar: np.ndarray
    u_bar: np.ndarray
    cross_utility: np.ndarray
    ledger_values: list = field(default_factory=list)
    ledger_prices: list = field(default_factory=list)

    @property
    def cumulative_gross_utilities(self) -> np.ndarray:
        """Exact cumulative gross utility per buyer (the cross-utility diagonal)."""
        return self.cross_utility.diagonal()


def bids(beta: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Paced bids beta_i * v_i(theta)."""
    return beta * values


def select_winner(bid_vector: np.ndarray) -> tuple[int, float]:
    """Highest bid wins at its own bid; ties go to the lowest index."""
    w = int(np.argmax(bid_vector))
    return w, float(bid_vector[w])


class PaceEngine:
    """Single-owner auction loop over one market instance."""

    def __init__(self, market: MarketInstance, config: PaceConfig):
        self.market = market
        self.config = config
        self.lo, self.hi = multiplier_box(market, config.delta0)
        if config.beta_init is None:
            beta0 = default_initial_multipliers(market, config.delta0)
        else:
            beta0 = np.asarray(config.beta_init, dtype=float).copy()
            if beta0.shape != (market.n,):
                raise ValueError("beta_init must have one entry per buyer")
            if np.any(beta0 < self.lo) or np.any(beta0 > self.hi):
                raise ValueError("beta_init outside the admissible box")
        n = market.n
        self.state = PaceState(
            t=0,
            beta=beta0,
            g_bar=np.zeros(n),
            b_bar=np.zeros(n),
            u_bar=np.zeros(n),
            cross_utility=np.zeros((n, n)),
        )
        self._quasilinear = market.mode == QUASILINEAR

    def step(self, item) -> StepObservation:
        """Run one auction step and update the averages and multipliers."""
        st = self.state
        market = self.market
        values = np.asarray(market.values_of(item), dtype=float)
        bid_vector = bids(st.beta, values)
        winner, price = select_winner(bid_vector)
        t = st.t + 1
        st.t = t

        gross = np.zeros(market.n)
        gross[winner] = values[winner]
        spend = np.zeros(market.n)
        spend[winner] = price
        if self._quasilinear:
            net = np.zeros(market.n)
            net[winner] = (1.0 - st.beta[winner]) * values[winner]
        else:
            net = gross

        st.g_bar += (gross - st.g_bar) / t
        st.b_bar += (spend - st.b_bar) / t
        if self._quasilinear:
            st.u_bar += (net - st.u_bar) / t
        else:
            st.u_bar = st.g_bar
        st.cross_utility[:, winner] += values
        if self.config.track_ledger:
            st.ledger_values.append(values)
            st.ledger_prices.append(price)

        # beta <- clamp(B / g_bar); an unserved buyer (g_bar = 0) sits at the cap
        with np.errstate(divide="ignore"):
            target = np.where(st.g_bar > 0, market.budgets / np.where(st.g_bar > 0, st.g_bar, 1.0), np.inf)
        st.beta = np.clip(target, self.lo, self.hi)
        if np.any(st.beta < self.lo) or np.any(st.beta > self.hi):
            raise AssertionError("multiplier left its box")

        return StepObservation(
            t=t, item=item, values=values, bids=bid_vector,
            winner=winner, price=price, net_utility=net,
        )

    def run(self, stream: ArrivalStream, observers=()) -> PaceState:
        """Drive the loop for the configured horizon.

        A stream that runs dry stops the loop cleanly at the achieved step
        count. Observers see each step's observation plus the post-update
        state.
        """
        for obs in observers:
            hook = getattr(obs, "on_run_start", None)
            if hook is not None:
                hook(self)
        for _ in range(self.config.horizon):
            try:
                item = stream.next_item(self.state)
            except StreamExhausted:
                break
            observation = self.step(item)
            for obs in observers:
                obs.on_step(observation, self.state)
        return self.state


def run(market: MarketInstance, config: PaceConfig, stream: ArrivalStream,
        observers=()) -> PaceState:
    """One-shot wrapper around PaceEngine.run."""
    return PaceEngine(market, config).run(stream, observers)


class PaceDynamics(BaseEstimator):
    """Estimator facade over the auction loop.

    ``fit`` consumes a market (and optionally an explicit arrival stream)
    and exposes the fitted multipliers and averages with trailing-underscore
    attributes, so the dynamics composes with scikit-learn style tooling.

    Parameters:
        horizon: steps to run; None means ten arrivals per buyer.
        delta0: clamp box slack.
        seed: seed for the default i.i.d. stream when none is supplied.
        track_ledger: keep the hindsight ledger (see PaceConfig).
    """

    def __init__(self, horizon: int | None = None, delta0: float = 0.05,
                 seed: int = 0, track_ledger: bool = True):
        self.horizon = horizon
        self.delta0 = delta0
        self.seed = seed
        self.track_ledger = track_ledger

    def fit(self, market: MarketInstance, arrivals: ArrivalStream | None = None,
            observers=()):
        horizon = self.horizon if self.horizon is not None else 10 * market.n
        if arrivals is None:
            if market.is_continuum:
                arrivals = sample_iid_continuum(self.seed)
            else:
                arrivals = sample_iid_finite(self.seed, market.item_space.supply)
        config = PaceConfig(horizon=horizon, delta0=self.delta0,
                            track_ledger=self.track_ledger)
        engine = PaceEngine(market, config)
        state = engine.run(arrivals, observers)
        self.state_ = state
        self.beta_ = state.beta.copy()
        self.avg_utility_ = state.g_bar.copy()
        self.avg_spend_ = state.b_bar.copy()
        self.n_steps_ = state.t
        return self
