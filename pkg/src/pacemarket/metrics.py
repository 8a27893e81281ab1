"""Convergence metrics computed alongside the auction loop.

The accumulator observes every step and, at checkpoints, materializes one
trace row holding relative errors of the multipliers, utilities and
expenditures against the static equilibrium, the hindsight regret, the
budget-weighted envy, and the closed-form mean-square rate envelopes the
dual-averaging analysis provides.

Notation used throughout (one value per buyer unless stated):

  * util_gap:       |avg utility - equilibrium utility|
  * spend_gap:      |avg expenditure - budget|
  * avg_price_gap:  sup-norm valuation bound times the running average of
                    the sup-norm multiplier error; bounds the average gap
                    between equilibrium and posted prices (a scalar)
  * paid_price_gap: signed average of (equilibrium price - paid price) over
                    a buyer's wins
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .engine import PaceEngine, PaceState, StepObservation
from .errors import (
    LedgerDisabled,
    ModeMismatch,
    UndefinedForSingleBuyer,
    ZeroReference,
)
from .market import LINEAR, QUASILINEAR, MarketInstance
from .oracle import CAP_TOL, EquilibriumSolution, price_function

PATHWISE_SLACK = 1e-9


def relative_error_norms(x, reference) -> tuple[float, float]:
    """Average and maximum componentwise relative error.

    The average is the 1-norm of (x - reference) / reference divided by the
    length; the maximum is the sup norm of the same vector.
    """
    x = np.asarray(x, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if np.any(reference == 0):
        raise ZeroReference("relative errors need a strictly positive reference")
    rel = np.abs((x - reference) / reference)
    return float(rel.mean()), float(rel.max())


def hindsight_utility(values, prices, budget_rate: float, t: int) -> float:
    """Best time-averaged utility affordable in hindsight at posted prices.

    Fractional knapsack over the arrived items: free valuable items are
    taken whole, the rest are taken greedily by value per unit price until
    the cumulative budget ``t * budget_rate`` runs out, with a fractional
    final item. Ties in value per price go to the earlier arrival.
    """
    v = np.asarray(values, dtype=float)[:t]
    p = np.asarray(prices, dtype=float)[:t]
    budget = t * budget_rate
    gain = float(v[(p <= 0) & (v > 0)].sum())
    paid = np.nonzero((p > 0) & (v > 0))[0]
    if paid.size:
        order = paid[np.argsort(-(v[paid] / p[paid]), kind="stable")]
        spend = np.cumsum(p[order])
        full = int(np.searchsorted(spend, budget, side="right"))
        gain += float(v[order[:full]].sum())
        if full < order.size:
            left = budget - (spend[full - 1] if full else 0.0)
            if left > 0:
                j = order[full]
                gain += float(v[j] * (left / p[j]))
    return gain / t


def envy_vector(cross_utility: np.ndarray, budgets: np.ndarray, t: int) -> np.ndarray:
    """Signed budget-weighted envy per buyer.

    rho_i compares buyer i's value of the best other bundle (per unit of
    its owner's budget) with her own; negative values mean she strictly
    prefers her own bundle.
    """
    n = budgets.size
    if n < 2:
        raise UndefinedForSingleBuyer("envy needs at least two buyers")
    avg = cross_utility / t
    weighted = avg / budgets[None, :]
    rho = np.empty(n)
    for i in range(n):
        others = np.delete(weighted[i], i)
        rho[i] = others.max() - weighted[i, i]
    return rho


@dataclass(frozen=True)
class TheoreticalConstants:
    """Constants entering the mean-square rate envelopes.

    ``g_sq`` is the largest second moment of a single arrival's value,
    ``sigma`` the strong-convexity modulus of the regularizer on the box,
    ``kappa`` the inverse minimum budget and ``c_const`` the utility-error
    amplification constant. ``interior`` is False when some equilibrium
    multiplier touches its box boundary, which degenerates ``c_const``.
    """

    mode: str
    g_sq: float
    sigma: float
    kappa: float
    v_sup: float
    eps: np.ndarray
    c_const: float
    interior: bool

    @classmethod
    def from_market(cls, market: MarketInstance, solution: EquilibriumSolution,
                    delta0: float = 0.05) -> "TheoreticalConstants":
        B = market.budgets
        beta = solution.beta_star
        v_sup = market.value_sup()
        if market.is_continuum:
            c, d = market.item_space.slopes, market.item_space.intercepts
            g_sq = float((c**2 / 3 + c * d + d**2).max())
        else:
            V, s = market.valuations, market.item_space.supply
            g_sq = float(((V**2) * s[None, :]).sum(axis=1).max())
        kappa = float(1.0 / B.min())
        if market.mode == LINEAR:
            sigma = float(B.min() / (1.0 + delta0) ** 2)
            lo, hi = B / (1.0 + delta0), 1.0 + delta0
            eps = np.minimum(hi - beta, beta - lo)
            c_const = kappa**2 * ((v_sup / delta0) ** 2 + (1.0 + delta0) ** 2)
            interior = bool(np.all(eps > 0))
        else:
            sigma = float(B.min())
            lo = solution.beta_min
            eps = np.minimum(1.0 - beta, beta - lo)
            uncapped = ~solution.capped
            interior = bool(np.all(eps > 0)) and not solution.capped.any()
            if uncapped.any():
                vs = market.expected_values()[uncapped]
                bu = B[uncapped]
                per = (v_sup**2) / eps[uncapped] ** 2 + (
                    (vs + bu) * (vs + 2 * bu) / bu
                ) ** 2
                c_const = float(per.max())
            else:
                c_const = math.nan
        return cls(
            mode=market.mode, g_sq=g_sq, sigma=sigma, kappa=kappa, v_sup=v_sup,
            eps=eps, c_const=float(c_const), interior=interior,
        )


def bound_envelopes(constants: TheoreticalConstants, t: int) -> dict:
    """Closed-form right-hand sides of the mean-square convergence bounds.

    Returns rhs_beta for ||beta^t - beta*||^2, rhs_u for the utility error
    and rhs_b for the expenditure error (the latter only for t >= 3). When
    the equilibrium touches a box boundary the utility constant is
    undefined in spirit; the values still evaluate and ``boundary`` is set.
    """
    if t < 1:
        raise ValueError("envelopes are defined for t >= 1")
    g_sq, sigma, c = constants.g_sq, constants.sigma, constants.c_const
    v_sq = constants.v_sup**2
    log_t = math.log(t)
    rhs_beta = (6.0 + log_t) * g_sq / (t * sigma**2)
    rhs_u = c * (6.0 + math.log(t + 1.0)) * g_sq / ((t + 1.0) * sigma**2)
    if t >= 3:
        rhs_b = (2.0 * g_sq / (t * sigma**2)) * (
            6.0 * (c + v_sq) + (c + 6.0 * v_sq) * log_t + (v_sq / 2.0) * log_t**2
        )
    else:
        rhs_b = math.nan
    return {
        "rhs_beta": rhs_beta,
        "rhs_u": rhs_u,
        "rhs_b": rhs_b,
        "boundary": not constants.interior,
    }


def default_checkpoints(n: int, horizon: int) -> list[int]:
    """Every epoch (n steps) plus a 1-2-5 log schedule, plus the horizon."""
    marks = set(range(n, horizon + 1, max(n, 1)))
    scale = 1
    while scale <= horizon:
        for lead in (1, 2, 5):
            if lead * scale <= horizon:
                marks.add(lead * scale)
        scale *= 10
    marks.add(horizon)
    return sorted(marks)


@dataclass
class TraceRow:
    """One checkpoint of one run."""

    t: int
    epoch: float
    beta_err_avg: float
    beta_err_max: float
    util_err_avg: float
    util_err_max: float
    spend_err_avg: float
    spend_err_max: float
    beta_sq_dist: float
    avg_price_gap: float
    mean_regret: float
    mean_pos_envy: float
    max_envy: float
    rhs_beta: float
    rhs_u: float
    rhs_b: float
    regret_margin: float
    envy_margin: float
    envy_margin_clamped: float
    seed: int | str | None = None

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


class MetricAccumulator:
    """Engine observer that materializes trace rows at checkpoints.

    Regret and envy follow the linear-market theory; quasilinear runs track
    multiplier, gross and net utility and expenditure errors only. The
    Theorem-style pathwise inequalities are checked at every checkpoint;
    ``regret_margin`` and ``envy_margin`` record how far the literal bounds
    are from being violated (negative means satisfied), and the clamped
    envy margin, whose bound is valid unconditionally, is asserted outright.
    """

    def __init__(self, market: MarketInstance, solution: EquilibriumSolution,
                 delta0: float = 0.05, checkpoints=None, track_regret: bool = True,
                 strict: bool = True):
        if market.mode != solution.mode:
            raise ModeMismatch("solution mode does not match market mode")
        self.market = market
        self.solution = solution
        self.constants = TheoreticalConstants.from_market(market, solution, delta0)
        self.checkpoints = None if checkpoints is None else set(checkpoints)
        self.track_regret = track_regret and market.mode == LINEAR
        self.strict = strict
        self.rows: list[TraceRow] = []
        self._price_of = price_function(solution, market)
        self._beta_in_use: np.ndarray | None = None
        self._gamma_sum = 0.0
        self._eta_sum = np.zeros(market.n)
        self._ledger_ok = False

    # -- observer hooks ----------------------------------------------------

    def on_run_start(self, engine: PaceEngine):
        self._beta_in_use = engine.state.beta
        self._ledger_ok = engine.config.track_ledger
        if self.checkpoints is None:
            self.checkpoints = set(default_checkpoints(self.market.n, engine.config.horizon))

    def on_step(self, obs: StepObservation, state: PaceState):
        beta_star = self.solution.beta_star
        self._gamma_sum += self.constants.v_sup * float(
            np.abs(self._beta_in_use - beta_star).max()
        )
        self._eta_sum[obs.winner] += self._price_of(obs.item) - obs.price
        self._beta_in_use = state.beta
        if obs.t in self.checkpoints:
            self.rows.append(self._make_row(obs.t, state))

    # -- error snapshots ----------------------------------------------------

    def errors_at(self, t: int, state: PaceState) -> dict:
        """Per-buyer utility and spend gaps plus the scalar price-gap average."""
        util_gap = np.abs(self._util_estimate(state) - self._util_reference())
        spend_gap = np.abs(state.b_bar - self.market.budgets)
        return {
            "util_gap": util_gap,
            "spend_gap": spend_gap,
            "avg_price_gap": self._gamma_sum / t,
            "paid_price_gap": self._eta_sum / t,
        }

    def _util_reference(self) -> np.ndarray:
        if self.market.mode == LINEAR:
            return self.solution.u_star
        return self.solution.u_qlme

    def _util_estimate(self, state: PaceState) -> np.ndarray:
        if self.market.mode == LINEAR:
            return state.g_bar
        return state.u_bar

    def regret_vector(self, t: int, state: PaceState) -> np.ndarray:
        """Hindsight regret max(hindsight utility - realized, 0) per buyer."""
        if not self._ledger_ok:
            raise LedgerDisabled("regret needs the per-step hindsight ledger")
        if self.market.mode != LINEAR:
            raise ModeMismatch("hindsight regret is defined for linear mode")
        values = np.asarray(state.ledger_values)
        prices = np.asarray(state.ledger_prices)
        B = self.market.budgets
        r = np.empty(self.market.n)
        for i in range(self.market.n):
            best = hindsight_utility(values[:, i], prices, B[i], t)
            r[i] = max(best - state.g_bar[i], 0.0)
        return r

    # -- row construction ----------------------------------------------------

    def _make_row(self, t: int, state: PaceState) -> TraceRow:
        market, solution = self.market, self.solution
        B = market.budgets
        beta_star = solution.beta_star
        beta_err_avg, beta_err_max = relative_error_norms(state.beta, beta_star)
        spend_err_avg, spend_err_max = relative_error_norms(state.b_bar, B)
        util_err_avg, util_err_max = self._util_errors(state)
        beta_sq = float(((state.beta - beta_star) ** 2).sum())
        gamma = self._gamma_sum / t
        eta = self._eta_sum / t
        envelopes = bound_envelopes(self.constants, t)

        mean_regret = math.nan
        regret_margin = math.nan
        mean_pos_envy = math.nan
        max_envy = math.nan
        envy_margin = math.nan
        envy_margin_clamped = math.nan
        if market.mode == LINEAR:
            xi = np.abs(state.g_bar - solution.u_star)
            delta = np.abs(state.b_bar - B)
            kappa = self.constants.kappa
            if self.track_regret and self._ledger_ok:
                regret = self.regret_vector(t, state)
                mean_regret = float(regret.mean())
                regret_margin = float((regret - (xi + gamma / B)).max())
            if market.n > 1:
                rho = envy_vector(state.cross_utility, B, t)
                mean_pos_envy = float(np.maximum(rho, 0.0).mean())
                max_envy = float(rho.max())
                spread = float((delta + eta).max())
                envy_margin = float((rho - (kappa * xi + kappa**2 * spread)).max())
                envy_margin_clamped = float(
                    (rho - (kappa * xi + kappa**2 * max(spread, 0.0))).max()
                )
            if self.strict:
                if not math.isnan(regret_margin) and regret_margin > PATHWISE_SLACK:
                    raise AssertionError(f"regret bound violated by {regret_margin:.3e} at t={t}")
                if not math.isnan(envy_margin_clamped) and envy_margin_clamped > PATHWISE_SLACK:
                    raise AssertionError(
                        f"clamped envy bound violated by {envy_margin_clamped:.3e} at t={t}"
                    )

        return TraceRow(
            t=t, epoch=t / market.n,
            beta_err_avg=beta_err_avg, beta_err_max=beta_err_max,
            util_err_avg=util_err_avg, util_err_max=util_err_max,
            spend_err_avg=spend_err_avg, spend_err_max=spend_err_max,
            beta_sq_dist=beta_sq, avg_price_gap=gamma,
            mean_regret=mean_regret, mean_pos_envy=mean_pos_envy, max_envy=max_envy,
            rhs_beta=envelopes["rhs_beta"], rhs_u=envelopes["rhs_u"],
            rhs_b=envelopes["rhs_b"],
            regret_margin=regret_margin, envy_margin=envy_margin,
            envy_margin_clamped=envy_margin_clamped,
        )

    def _util_errors(self, state: PaceState) -> tuple[float, float]:
        if self.market.mode == LINEAR:
            return relative_error_norms(state.g_bar, self.solution.u_star)
        # capped buyers have zero net equilibrium utility; their error is
        # reported on the absolute scale
        reference = self.solution.u_qlme
        capped = self.solution.capped
        rel = np.where(
            capped,
            np.abs(state.u_bar),
            np.abs(state.u_bar - reference) / np.where(capped, 1.0, np.maximum(reference, 1e-300)),
        )
        return float(rel.mean()), float(rel.max())

    def paid_price_gap_within_avg_gap(self, t: int) -> bool:
        """Invariant: every |paid_price_gap_i| is at most avg_price_gap."""
        gamma = self._gamma_sum / t
        return bool(np.all(np.abs(self._eta_sum / t) <= gamma + PATHWISE_SLACK))
