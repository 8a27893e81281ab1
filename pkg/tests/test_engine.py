import numpy as np
import pytest

from pacemarket import (
    PaceConfig,
    PaceDynamics,
    PaceEngine,
    bids,
    normalize_market,
    sample_iid_finite,
    select_winner,
)
from pacemarket.arrivals import ReplayStream
from pacemarket.engine import default_initial_multipliers, multiplier_box, quasilinear_floor
from pacemarket.market import QUASILINEAR

from conftest import random_ceei_market, random_ql_market


class TestBidsAndWinner:
    def test_bids_elementwise(self):
        assert np.allclose(bids(np.array([0.5, 1.0]), np.array([2.0, 0.8])), [1.0, 0.8])

    def test_zero_values_zero_bids(self):
        assert np.allclose(bids(np.array([0.7, 0.9]), np.zeros(2)), 0.0)

    def test_unit_multipliers_bid_values(self):
        v = np.array([0.3, 1.4, 0.2])
        assert np.allclose(bids(np.ones(3), v), v)

    def test_highest_bid_wins_at_first_price(self):
        assert select_winner(np.array([1.0, 0.8])) == (0, 1.0)

    def test_tie_goes_to_lowest_index(self):
        assert select_winner(np.array([0.7, 0.7])) == (0, 0.7)

    def test_all_zero_bids(self):
        assert select_winner(np.zeros(3)) == (0, 0.0)


class TestLinearStep:
    def test_single_buyer_fixed_point(self):
        mk = normalize_market([1.0], [[1.0]], [1.0], "linear")
        engine = PaceEngine(mk, PaceConfig(horizon=1))
        assert engine.state.beta[0] == pytest.approx(1.0)  # (B+1)/2 with B=1
        obs = engine.step(0)
        assert obs.winner == 0
        assert obs.price == pytest.approx(1.0)
        assert engine.state.g_bar[0] == pytest.approx(1.0)
        assert engine.state.beta[0] == pytest.approx(1.0)

    def test_upper_clamp(self):
        # B=0.5, g_bar=0.25 gives B/g_bar = 2, clamped at 1 + delta0
        mk = normalize_market([1, 1], [[1, 0], [0, 1]], [1, 1], "linear")
        engine = PaceEngine(mk, PaceConfig(horizon=10, delta0=0.05))
        engine.state.g_bar[:] = [0.25, 0.25]
        engine.state.t = 3
        obs = engine.step(0)
        assert engine.state.beta[1] == pytest.approx(1.05)

    def test_starved_buyer_sits_at_cap(self):
        mk = normalize_market([1, 1], [[1, 0], [0, 1]], [1, 1], "linear")
        engine = PaceEngine(mk, PaceConfig(horizon=4))
        engine.step(0)  # buyer 1 never wins, g_bar stays 0
        assert engine.state.beta[1] == pytest.approx(1.05)

    def test_default_initial_multipliers(self):
        mk = normalize_market([3, 1], np.ones((2, 2)), [1, 1], "linear")
        beta0 = default_initial_multipliers(mk, 0.05)
        assert np.allclose(beta0, (mk.budgets + 1) / 2)

    def test_nonwinner_weakly_increases(self):
        mk = random_ceei_market(6, 10, seed=4)
        engine = PaceEngine(mk, PaceConfig(horizon=500))
        stream = sample_iid_finite(11, mk.item_space.supply)
        for _ in range(500):
            before = engine.state.beta
            obs = engine.step(stream.next_item())
            after = engine.state.beta
            losers = np.arange(mk.n) != obs.winner
            assert np.all(after[losers] >= before[losers])

    def test_winner_can_move_both_ways(self):
        # one valuable and one near-worthless item: winning the valuable one
        # drags the average up (multiplier falls), then winning the cheap one
        # drags it back down (multiplier rises)
        mk = normalize_market([9, 1], [[1.0, 0.05], [1.0, 0.0]], [1, 1], "linear")
        engine = PaceEngine(mk, PaceConfig(horizon=2))
        before = engine.state.beta.copy()
        obs = engine.step(0)
        assert obs.winner == 0
        mid = engine.state.beta.copy()
        assert mid[0] < before[0]
        obs = engine.step(1)
        assert obs.winner == 0
        assert engine.state.beta[0] > mid[0]


class TestQuasilinearStep:
    def test_net_utility_split(self):
        mk = normalize_market([1.0], [[2.0, 0.0]], [1, 1], QUASILINEAR)
        engine = PaceEngine(mk, PaceConfig(horizon=1, beta_init=np.array([0.6])))
        obs = engine.step(0)
        assert obs.price == pytest.approx(0.6 * 2.0)
        assert obs.net_utility[0] == pytest.approx(0.4 * 2.0)
        assert engine.state.g_bar[0] == pytest.approx(2.0)
        assert engine.state.b_bar[0] == pytest.approx(1.2)

    def test_floor_formula(self):
        mk = normalize_market([1, 1], [[2, 0], [0, 2]], [1, 1], QUASILINEAR)
        # B_i = 0.5 and <v_i, s> = 0.5 after the joint rescale by 2
        assert np.allclose(mk.budgets, [0.5, 0.5])
        assert np.allclose(quasilinear_floor(mk), 0.5 / (0.5 + 1.0))

    def test_cap_gives_zero_net_utility(self):
        mk = normalize_market([1.0], [[2.0, 0.0]], [1, 1], QUASILINEAR)
        engine = PaceEngine(mk, PaceConfig(horizon=1, beta_init=np.array([1.0])))
        obs = engine.step(0)
        assert obs.net_utility[0] == 0.0

    def test_box_containment(self):
        mk = random_ql_market(4, 6, seed=2)
        lo, hi = multiplier_box(mk, 0.05)
        engine = PaceEngine(mk, PaceConfig(horizon=300))
        stream = sample_iid_finite(0, mk.item_space.supply)
        for _ in range(300):
            engine.step(stream.next_item())
            assert np.all(engine.state.beta >= lo)
            assert np.all(engine.state.beta <= hi)


class TestRun:
    def test_empty_stream_leaves_state_untouched(self):
        mk = random_ceei_market(3, 4, seed=0)
        engine = PaceEngine(mk, PaceConfig(horizon=100))
        beta0 = engine.state.beta.copy()
        state = engine.run(ReplayStream([]))
        assert state.t == 0
        assert np.array_equal(state.beta, beta0)

    def test_stream_exhaustion_stops_cleanly(self):
        mk = random_ceei_market(3, 4, seed=0)
        engine = PaceEngine(mk, PaceConfig(horizon=100))
        state = engine.run(ReplayStream([0, 1, 2]))
        assert state.t == 3

    def test_deterministic_runs_bit_identical(self):
        mk = random_ceei_market(5, 7, seed=6)

        def final_beta():
            engine = PaceEngine(mk, PaceConfig(horizon=400))
            return engine.run(sample_iid_finite(42, mk.item_space.supply)).beta

        assert np.array_equal(final_beta(), final_beta())

    def test_symmetric_market_splits_evenly(self, identical_market):
        engine = PaceEngine(identical_market, PaceConfig(horizon=10_000))
        state = engine.run(sample_iid_finite(0, identical_market.item_space.supply))
        assert np.allclose(state.g_bar, 0.5, atol=0.05)

    def test_single_winner_accounting(self):
        mk = random_ceei_market(4, 5, seed=3)
        engine = PaceEngine(mk, PaceConfig(horizon=600))
        stream = sample_iid_finite(8, mk.item_space.supply)
        total_price = 0.0
        for _ in range(600):
            obs = engine.step(stream.next_item())
            assert np.count_nonzero(obs.net_utility) <= 1
            total_price += obs.price
        state = engine.state
        # t * b_bar equals the total first-price revenue
        assert state.t * state.b_bar.sum() == pytest.approx(total_price, rel=1e-9)
        # t * g_bar matches the cross-utility diagonal
        assert np.allclose(state.t * state.g_bar, state.cross_utility.diagonal(),
                           rtol=1e-9, atol=1e-12)

    def test_price_bounded_by_cap_times_value_sup(self):
        mk = random_ceei_market(5, 9, seed=12)
        engine = PaceEngine(mk, PaceConfig(horizon=500, delta0=0.05))
        stream = sample_iid_finite(1, mk.item_space.supply)
        bound = 1.05 * mk.value_sup()
        for _ in range(500):
            obs = engine.step(stream.next_item())
            assert obs.price <= bound + 1e-12

    def test_linear_net_equals_gross(self):
        mk = random_ceei_market(3, 4, seed=7)
        engine = PaceEngine(mk, PaceConfig(horizon=50))
        stream = sample_iid_finite(2, mk.item_space.supply)
        for _ in range(50):
            obs = engine.step(stream.next_item())
            gross = np.zeros(mk.n)
            gross[obs.winner] = obs.values[obs.winner]
            assert np.array_equal(obs.net_utility, gross)


class TestPaceDynamics:
    def test_estimator_fits_and_exposes_state(self, identical_market):
        dyn = PaceDynamics(horizon=500, seed=3).fit(identical_market)
        assert dyn.n_steps_ == 500
        assert dyn.beta_.shape == (2,)
        assert np.allclose(dyn.avg_utility_, 0.5, atol=0.2)

    def test_default_horizon_is_ten_epochs(self, identical_market):
        dyn = PaceDynamics(seed=0).fit(identical_market)
        assert dyn.n_steps_ == 10 * identical_market.n

    def test_get_params_round_trip(self):
        dyn = PaceDynamics(horizon=7, delta0=0.1, seed=5, track_ledger=False)
        params = dyn.get_params()
        clone = PaceDynamics(**params)
        assert clone.get_params() == params

    def test_ledger_disabled_keeps_memory_empty(self, identical_market):
        dyn = PaceDynamics(horizon=100, track_ledger=False).fit(identical_market)
        assert dyn.state_.ledger_values == []
