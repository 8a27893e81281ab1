import math

import numpy as np
import pytest

from pacemarket import (
    MetricAccumulator,
    PaceConfig,
    PaceEngine,
    TheoreticalConstants,
    bound_envelopes,
    envy_vector,
    generate_synthetic,
    hindsight_utility,
    normalize_market,
    relative_error_norms,
    sample_iid_continuum,
    sample_iid_finite,
    solve_linear_dual,
    solve_quasilinear_dual,
)
from pacemarket.errors import (
    LedgerDisabled,
    UndefinedForSingleBuyer,
    ZeroReference,
)
from pacemarket.market import QUASILINEAR
from pacemarket.metrics import PATHWISE_SLACK

from conftest import random_ceei_market, random_ql_market


def knapsack_grid_optimum(values, prices, budget, levels=64):
    """Exhaustive optimum of the hindsight program on the z-grid {0..levels}/levels.

    Bounded-knapsack dynamic program in integer spend units of
    1/(16*levels); exact whenever every price sits on the 1/16 lattice.
    Independent of the greedy implementation it checks.
    """
    values = np.asarray(values, dtype=float)
    prices = np.asarray(prices, dtype=float)
    sixteenths = np.rint(prices * 16).astype(int)
    assert np.allclose(sixteenths / 16.0, prices), "prices must sit on the 1/16 lattice"
    capacity = int(math.floor(budget * 16 * levels + 1e-9))
    dp = np.zeros(capacity + 1)  # dp[w] = best utility with spend <= w units
    for v, w16 in zip(values, sixteenths):
        if v <= 0:
            continue
        if w16 == 0:
            dp = dp + v  # free item: take it whole
            continue
        new = dp.copy()
        for k in range(1, levels + 1):
            cost = k * w16  # z = k/levels costs k * w16 spend units
            if cost > capacity:
                break
            gain = v * k / levels
            shifted = np.full_like(dp, -np.inf)
            shifted[cost:] = dp[:-cost] + gain
            new = np.maximum(new, shifted)
        dp = new
    return float(dp.max())


class TestRelativeErrorNorms:
    def test_zero_when_equal(self):
        assert relative_error_norms([1.0, 2.0], [1.0, 2.0]) == (0.0, 0.0)

    def test_symmetric_deviation(self):
        avg, mx = relative_error_norms([1.1, 0.9], [1.0, 1.0])
        assert avg == pytest.approx(0.1)
        assert mx == pytest.approx(0.1)

    def test_mixed_deviation(self):
        avg, mx = relative_error_norms([1.2, 1.0], [1.0, 1.0])
        assert avg == pytest.approx(0.1)
        assert mx == pytest.approx(0.2)

    def test_zero_reference_rejected(self):
        with pytest.raises(ZeroReference):
            relative_error_norms([1.0], [0.0])


class TestHindsightUtility:
    def test_worked_example(self):
        # budget 0.3 buys item 1 fully and half of item 2
        values = [1.0, 0.5, 0.2]
        prices = [0.2, 0.2, 0.2]
        got = hindsight_utility(values, prices, budget_rate=0.1, t=3)
        assert got == pytest.approx((1.0 + 0.25) / 3.0)

    def test_free_items_taken_fully(self):
        got = hindsight_utility([0.4, 0.6], [0.0, 0.0], budget_rate=0.01, t=2)
        assert got == pytest.approx(0.5)

    def test_single_binding_price(self):
        # equal value-per-price, each price alone exceeds the whole budget:
        # only a (budget / price) fraction of one item is affordable
        values = [0.5, 0.5]
        prices = [1.0, 1.0]
        got = hindsight_utility(values, prices, budget_rate=0.25, t=2)
        assert got == pytest.approx((0.5 / 1.0) * 0.5 / 2)

    def test_ratio_tie_broken_by_arrival_order(self):
        values = [0.5, 1.0]
        prices = [0.5, 1.0]  # equal ratios, budget only covers the first
        got = hindsight_utility(values, prices, budget_rate=0.25, t=2)
        assert got == pytest.approx(0.25)  # takes all of item 0 (0.5) / 2

    def test_zero_value_items_skipped(self):
        got = hindsight_utility([0.0, 1.0], [0.1, 0.5], budget_rate=0.25, t=2)
        assert got == pytest.approx(0.5)

    def test_matches_grid_dp_on_lattice_ledgers(self):
        rng = np.random.default_rng(0)
        for trial in range(60):
            t = int(rng.integers(1, 9))
            values = rng.uniform(0.0, 1.0, size=t)
            # prices on the 1/16 lattice with power-of-two numerators keep
            # the greedy optimum exactly on the 1/64 z-grid
            prices = rng.choice([1, 2, 4, 8, 16], size=t) / 16.0
            budget_units = int(rng.integers(1, 16 * t))
            budget = budget_units / 16.0
            greedy = hindsight_utility(values, prices, budget / t, t) * t
            grid = knapsack_grid_optimum(values, prices, budget)
            assert abs(greedy - grid) < 1e-9


class TestEnvy:
    def test_two_buyer_example(self):
        # buyer 0 wins one item valued (1, 0.5) at t=1, budgets (0.5, 0.5)
        cross = np.array([[1.0, 0.0], [0.5, 0.0]])
        rho = envy_vector(cross, np.array([0.5, 0.5]), t=1)
        assert rho[0] == pytest.approx(-2.0)
        assert rho[1] == pytest.approx(1.0)

    def test_alternating_symmetric_wins(self):
        # identical buyers, perfectly alternating unit-value wins
        cross = np.array([[3.0, 3.0], [3.0, 3.0]])
        rho = envy_vector(cross, np.array([0.5, 0.5]), t=6)
        assert np.allclose(rho, 0.0)

    def test_single_buyer_undefined(self):
        with pytest.raises(UndefinedForSingleBuyer):
            envy_vector(np.array([[1.0]]), np.array([1.0]), t=1)


class TestConstantsAndEnvelopes:
    def _constants(self, seed=0):
        mk = random_ceei_market(5, 8, seed=seed)
        sol = solve_linear_dual(mk)
        return mk, sol, TheoreticalConstants.from_market(mk, sol, delta0=0.05)

    def test_linear_constants(self):
        mk, sol, consts = self._constants()
        V, s = mk.valuations, mk.item_space.supply
        assert consts.g_sq == pytest.approx(((V**2) * s).sum(axis=1).max())
        assert consts.sigma == pytest.approx(mk.budgets.min() / 1.05**2)
        assert consts.kappa == pytest.approx(1.0 / mk.budgets.min())
        assert consts.c_const == pytest.approx(
            consts.kappa**2 * ((consts.v_sup / 0.05) ** 2 + 1.05**2)
        )
        assert consts.interior

    def test_envelope_at_t_one(self):
        _, _, consts = self._constants()
        env = bound_envelopes(consts, 1)
        assert env["rhs_beta"] == pytest.approx(6.0 * consts.g_sq / consts.sigma**2)
        assert math.isnan(env["rhs_b"])  # defined from t >= 3

    def test_envelope_decays_by_decade(self):
        _, _, consts = self._constants()
        for t in (10, 100, 1000):
            assert bound_envelopes(consts, 10 * t)["rhs_beta"] < bound_envelopes(consts, t)["rhs_beta"]

    def test_quasilinear_sigma_is_min_budget(self):
        mk = random_ql_market(4, 6, seed=1)
        sol = solve_quasilinear_dual(mk)
        consts = TheoreticalConstants.from_market(mk, sol)
        assert consts.sigma == pytest.approx(mk.budgets.min())
        # capped buyers sit on the box boundary
        assert consts.interior == (not sol.capped.any())


def run_with_metrics(mk, sol, horizon, seed, **kwargs):
    engine = PaceEngine(mk, PaceConfig(horizon=horizon))
    acc = MetricAccumulator(mk, sol, **kwargs)
    if mk.is_continuum:
        stream = sample_iid_continuum(seed)
    else:
        stream = sample_iid_finite(seed, mk.item_space.supply)
    engine.run(stream, observers=(acc,))
    return engine, acc


class TestAccumulator:
    def test_zero_errors_under_exact_tracking(self):
        # a single buyer with constant unit valuation tracks the equilibrium
        # exactly from the first step
        mk = normalize_market([1.0], [[1.0, 1.0]], [1, 1], "linear")
        sol = solve_linear_dual(mk)
        engine, acc = run_with_metrics(mk, sol, horizon=50, seed=0)
        errs = acc.errors_at(engine.state.t, engine.state)
        assert np.allclose(errs["util_gap"], 0.0, atol=1e-12)
        assert np.allclose(errs["spend_gap"], 0.0, atol=1e-12)
        assert errs["avg_price_gap"] == pytest.approx(0.0, abs=1e-12)
        last = acc.rows[-1]
        assert last.beta_err_avg == 0.0
        assert last.mean_regret == pytest.approx(0.0, abs=1e-12)

    def test_single_step_single_buyer(self):
        mk = normalize_market([1.0], [[1.0, 1.0]], [1, 1], "linear")
        sol = solve_linear_dual(mk)
        engine, acc = run_with_metrics(mk, sol, horizon=1, seed=3,
                                       checkpoints=(1,))
        errs = acc.errors_at(1, engine.state)
        assert errs["util_gap"][0] == pytest.approx(0.0, abs=1e-12)
        assert errs["spend_gap"][0] == pytest.approx(0.0, abs=1e-12)

    def test_errors_decay_on_complementary_market(self, complementary_market):
        sol = solve_linear_dual(complementary_market)
        engine, acc = run_with_metrics(complementary_market, sol,
                                       horizon=10_000, seed=5)
        errs = acc.errors_at(engine.state.t, engine.state)
        assert np.all(errs["spend_gap"] <= 0.05 * complementary_market.budgets)
        assert acc.rows[-1].mean_regret < 0.02

    def test_paid_price_gap_bounded_by_avg_gap(self):
        mk = random_ceei_market(5, 8, seed=2)
        sol = solve_linear_dual(mk)
        engine, acc = run_with_metrics(mk, sol, horizon=2000, seed=7)
        assert acc.paid_price_gap_within_avg_gap(engine.state.t)

    def test_pathwise_bounds_hold_on_random_runs(self):
        for seed in range(3):
            mk = random_ceei_market(4, 7, seed=50 + seed)
            sol = solve_linear_dual(mk)
            engine, acc = run_with_metrics(mk, sol, horizon=3000, seed=seed,
                                           strict=True)
            for row in acc.rows:
                assert row.regret_margin <= PATHWISE_SLACK
                assert row.envy_margin_clamped <= PATHWISE_SLACK

    def test_regret_requires_ledger(self):
        mk = random_ceei_market(3, 5, seed=0)
        sol = solve_linear_dual(mk)
        engine = PaceEngine(mk, PaceConfig(horizon=10, track_ledger=False))
        acc = MetricAccumulator(mk, sol)
        engine.run(sample_iid_finite(0, mk.item_space.supply), observers=(acc,))
        with pytest.raises(LedgerDisabled):
            acc.regret_vector(engine.state.t, engine.state)

    def test_quasilinear_rows_skip_regret_and_envy(self):
        mk = random_ql_market(4, 6, seed=9, value_scale=4.0)
        sol = solve_quasilinear_dual(mk)
        engine, acc = run_with_metrics(mk, sol, horizon=500, seed=1)
        last = acc.rows[-1]
        assert math.isnan(last.mean_regret)
        assert math.isnan(last.max_envy)
        assert last.util_err_avg >= 0.0

    def test_quasilinear_capped_buyers_use_absolute_error(self):
        mk = random_ql_market(6, 9, seed=3)  # unscaled: most buyers capped
        sol = solve_quasilinear_dual(mk)
        assert sol.capped.any()
        engine, acc = run_with_metrics(mk, sol, horizon=300, seed=2)
        assert np.isfinite(acc.rows[-1].util_err_avg)
