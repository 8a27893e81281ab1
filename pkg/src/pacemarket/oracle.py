"""Static equilibrium oracles for the underlying market.

The equilibrium utility prices beta* minimize the bounded dual of the
Eisenberg-Gale program,

    F(beta) = E_theta[ max_i beta_i v_i(theta) ] - sum_i B_i log beta_i,

over a box that is known to contain the optimum. Three routes compute or
cross-check beta*:

  * an interior-point solve of the dual (the production path), polished by
    an exact rescaling step once the winner-tie structure is known;
  * the noise-free twin of the online dynamics, iterating the multiplier
    update on exact expected subgradients (cross-validation path);
  * exhaustive grid search for tiny markets (independent test oracle).

KKT residuals certify a solution: prices must be the paced-bid upper
envelope, a budget-exact allocation must exist on the winner graph, and in
quasilinear mode capped buyers must have zero net value slack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .engine import multiplier_box, quasilinear_floor
from .errors import (
    BoundaryEquilibrium,
    ModeMismatch,
    NoConvergence,
    PrimalRecoveryFailed,
    TooLarge,
)
from .market import (
    LINEAR,
    QUASILINEAR,
    FiniteItemSpace,
    MarketInstance,
)

CAP_TOL = 1e-6  # |beta* - 1| below this counts as a capped quasilinear buyer


@dataclass(frozen=True)
class EquilibriumSolution:
    """Equilibrium utility prices and derived quantities.

    ``u_star`` is the gross equilibrium utility B_i / beta*_i. In
    quasilinear mode ``u_qlme`` is the net equilibrium utility, zero for
    capped buyers (beta* = 1) and (1 - beta*) u* otherwise.
    """

    mode: str
    beta_star: np.ndarray
    u_star: np.ndarray
    u_qlme: np.ndarray | None = None
    beta_min: np.ndarray | None = None
    prices: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def capped(self) -> np.ndarray:
        """Quasilinear buyers whose multiplier sits at the cap of 1."""
        return self.beta_star > 1.0 - CAP_TOL


def price_function(solution: EquilibriumSolution, market: MarketInstance):
    """Equilibrium price of any item: the paced-bid upper envelope."""
    beta = solution.beta_star

    def price(item) -> float:
        return float(np.max(beta * market.values_of(item)))

    return price


def dual_objective(beta: np.ndarray, market: MarketInstance) -> float:
    """F evaluated at one multiplier vector (finite markets)."""
    V, s, B = market.valuations, market.item_space.supply, market.budgets
    envelope = (beta[:, None] * V).max(axis=0)
    return float((envelope * s).sum() - (B * np.log(beta)).sum())


# ---------------------------------------------------------------------------
# winner-tie structure


def _relative_gaps(beta: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    bid = beta[:, None] * V
    p = bid.max(axis=0)
    safe = np.where(p > 0, p, 1.0)
    return 1.0 - bid / safe[None, :], p


def tie_threshold(rel_gaps: np.ndarray, floor: float = 1e-12, ceil: float = 1e-3) -> float:
    """Split the gap spectrum at its widest multiplicative jump.

    Essential ties show up as relative bid gaps near machine precision,
    genuine non-ties as macroscopic gaps; the threshold is the geometric
    mean across the largest log-gap below ``ceil``.
    """
    g = np.sort(rel_gaps[(rel_gaps > floor) & (rel_gaps < 0.5)])
    if g.size == 0:
        return floor
    upto = int(np.searchsorted(g, ceil))
    cand = g[: upto + 1]
    if cand.size == 0:
        return floor
    logs = np.log10(np.concatenate([[floor], cand]))
    k = int(np.argmax(np.diff(logs)))
    low = floor if k == 0 else cand[k - 1]
    return float(np.sqrt(low * cand[k]))


def _winner_graph(beta: np.ndarray, V: np.ndarray, threshold: float | None = None):
    rel, p = _relative_gaps(beta, V)
    if threshold is None:
        threshold = tie_threshold(rel)
    tied = (rel <= threshold) & (p > 0)[None, :]
    return tied, p, threshold


# ---------------------------------------------------------------------------
# primal recovery: budget transportation on the winner graph


def _transport(B, money, tied, capped=None, max_iters=20000):
    """Alternating proportional scaling of winner-graph money flows.

    Rows chase the budgets, columns the items' money mass. Capped
    quasilinear buyers may underspend; they get a virtual slack column
    absorbing the aggregate budget surplus. Returns the money matrix and
    the worst marginal residual.
    """
    n = B.size
    money = np.asarray(money, dtype=float)
    active = money > 0
    if np.any(active & ~tied.any(axis=0)):
        raise PrimalRecoveryFailed("an item with positive price has no winner")
    slack = max(float(B.sum() - money.sum()), 0.0)
    cols = money
    graph = tied
    if capped is not None and capped.any() and slack > 0:
        cols = np.concatenate([money, [slack]])
        graph = np.concatenate([tied, capped[:, None]], axis=1)
    Y = np.where(graph, np.outer(B, cols), 0.0)
    csum = Y.sum(axis=0)
    Y *= np.where(csum > 0, cols / np.where(csum > 0, csum, 1.0), 0.0)[None, :]
    prev = np.inf
    for k in range(max_iters):
        rsum = Y.sum(axis=1)
        res = np.abs(rsum - B).max()
        if res < 1e-13:
            break
        if k % 500 == 499:
            if not np.isfinite(res) or res > prev * 0.999:
                break
            prev = res
        Y *= (B / np.where(rsum > 0, rsum, 1.0))[:, None]
        csum = Y.sum(axis=0)
        Y *= np.where(csum > 0, cols / np.where(csum > 0, csum, 1.0), 0.0)[None, :]
    if not np.all(np.isfinite(Y)):
        raise PrimalRecoveryFailed("transportation scaling diverged")
    Y = Y[:, : money.size]
    spent = Y.sum(axis=1)
    if capped is not None and capped.any():
        # capped buyers may underspend; only overspending counts for them
        rres = np.where(capped, np.maximum(spent - B, 0.0), np.abs(spent - B))
    else:
        rres = np.abs(spent - B)
    cres = np.abs(Y.sum(axis=0) - money)
    return Y, float(max(rres.max(initial=0.0), cres.max(initial=0.0)))


def _transport_residual(market, beta, capped=None) -> float:
    tied, p, _ = _winner_graph(beta, market.valuations)
    try:
        _, res = _transport(market.budgets, market.item_space.supply * p, tied, capped)
    except PrimalRecoveryFailed:
        return np.inf
    return res


# ---------------------------------------------------------------------------
# exact polish of an approximate beta


def _refine(market: MarketInstance, beta: np.ndarray, threshold: float) -> np.ndarray | None:
    """Rescale beta so each tie component is an exact equilibrium.

    Within one connected component of the winner graph the bid ties pin all
    multiplier ratios; the remaining scale comes from money balance
    (component budgets equal component price mass) or, in quasilinear mode,
    from a member sitting at the cap of 1. Returns None when the detected
    structure is internally inconsistent.
    """
    V, s, B = market.valuations, market.item_space.supply, market.budgets
    n, m = V.shape
    tied, p, _ = _winner_graph(beta, V, threshold)
    capped = (beta > 1.0 - CAP_TOL) if market.mode == QUASILINEAR else np.zeros(n, bool)

    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    item_buyers = [np.nonzero(tied[:, j])[0] for j in range(m)]
    for ib in item_buyers:
        for k in ib[1:]:
            ra, rb = find(int(ib[0])), find(int(k))
            if ra != rb:
                parent[rb] = ra
    comp = np.array([find(i) for i in range(n)])

    ratio = np.zeros(n)
    refined = beta.astype(float).copy()
    for root in np.unique(comp):
        members = np.nonzero(comp == root)[0]
        anchor = int(members[0])
        ratio[anchor] = 1.0
        known = {anchor}
        frontier = [anchor]
        while frontier:
            nxt = []
            for i in frontier:
                for j in np.nonzero(tied[i])[0]:
                    for k in item_buyers[j]:
                        k = int(k)
                        if k not in known:
                            if V[k, j] <= 0:
                                return None
                            ratio[k] = ratio[i] * V[i, j] / V[k, j]
                            known.add(k)
                            nxt.append(k)
            frontier = nxt
        if len(known) != members.size:
            return None

        comp_capped = members[capped[members]]
        if comp_capped.size:
            scale = 1.0 / ratio[comp_capped].max()
        else:
            mass = 0.0
            for j in range(m):
                ib = item_buyers[j]
                if ib.size and comp[ib[0]] == root:
                    mass += s[j] * max(ratio[i] * V[i, j] for i in ib)
            if mass <= 0:
                return None
            scale = B[members].sum() / mass
        refined[members] = ratio[members] * scale
    if not np.all(np.isfinite(refined)) or np.any(refined <= 0):
        return None
    return refined


def _polish(market: MarketInstance, beta: np.ndarray):
    """Try tie thresholds from the gap spectrum, keep the best-certified beta."""
    rel, _ = _relative_gaps(beta, market.valuations)
    capped = (beta > 1.0 - CAP_TOL) if market.mode == QUASILINEAR else None
    best, best_res = beta, _transport_residual(market, beta, capped)
    spectrum = tie_threshold(rel)
    ladder = sorted({spectrum, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4})
    for threshold in ladder:
        cand = _refine(market, beta, threshold)
        if cand is None:
            continue
        cand_capped = (cand > 1.0 - CAP_TOL) if market.mode == QUASILINEAR else None
        res = _transport_residual(market, cand, cand_capped)
        if res < best_res:
            best, best_res = cand, res
        if best_res < 1e-12:
            break
    return best, best_res


# ---------------------------------------------------------------------------
# solver routes


def _conic_solve(market: MarketInstance, lo, hi, tolerance, max_iters):
    import warnings

    import cvxpy as cp

    V, s, B = market.valuations, market.item_space.supply, market.budgets
    n, m = V.shape
    beta = cp.Variable(n)
    p = cp.Variable(m)
    constraints = [p >= beta[i] * V[i] for i in range(n)]
    constraints += [beta >= lo, beta <= hi]
    problem = cp.Problem(cp.Minimize(s @ p - B @ cp.log(beta)), constraints)
    tol = float(min(max(tolerance, 1e-12), 1e-6))
    try:
        with warnings.catch_warnings():
            # reduced-accuracy warnings are expected at these tolerances; the
            # polish stage certifies the final answer independently
            warnings.simplefilter("ignore", UserWarning)
            problem.solve(
                solver="CLARABEL",
                tol_gap_abs=tol,
                tol_gap_rel=tol,
                tol_feas=tol,
                max_iter=int(min(max_iters, 500)),
            )
    except cp.error.SolverError as exc:
        raise NoConvergence(0, np.inf, str(exc)) from exc
    if beta.value is None:
        raise NoConvergence(0, np.inf, f"solver status {problem.status}")
    return np.clip(np.asarray(beta.value, dtype=float), lo, hi), problem.status


def _solve_dual(market: MarketInstance, lo, hi, tolerance, max_iters):
    raw, status = _conic_solve(market, lo, hi, tolerance, max_iters)
    polished, residual = _polish(market, raw)
    diagnostics = {
        "solver": "clarabel+polish",
        "solver_status": status,
        "transport_residual": residual,
        "polish_shift": float(np.abs(polished - raw).max()),
    }
    return polished, diagnostics


def solve_linear_dual(
    market: MarketInstance,
    delta0: float = 0.05,
    tolerance: float = 1e-10,
    max_iters: int = 10**6,
    cells: int = 10_000,
) -> EquilibriumSolution:
    """Equilibrium utility prices of a linear market.

    Continuum markets are discretized into ``cells`` uniform cells first.
    The returned beta* is clipped into [B, 1], the interval the equilibrium
    is known to occupy; the size of that clip is recorded in
    ``diagnostics["bound_clip"]`` so an inaccurate solve cannot hide behind
    it.
    """
    if market.mode != LINEAR:
        raise ModeMismatch("solve_linear_dual expects a linear market")
    work = discretize_continuum(market, cells) if market.is_continuum else market
    lo, hi = multiplier_box(work, delta0)
    beta, diagnostics = _solve_dual(work, lo, hi, tolerance, max_iters)
    clipped = np.clip(beta, work.budgets, 1.0)
    diagnostics["bound_clip"] = float(np.abs(clipped - beta).max())
    diagnostics["objective"] = dual_objective(clipped, work)
    u_star = market.budgets / clipped
    prices = (clipped[:, None] * work.valuations).max(axis=0) if not market.is_continuum else None
    return EquilibriumSolution(
        mode=LINEAR, beta_star=clipped, u_star=u_star,
        prices=prices, diagnostics=diagnostics,
    )


def solve_quasilinear_dual(
    market: MarketInstance,
    tolerance: float = 1e-10,
    max_iters: int = 10**6,
) -> EquilibriumSolution:
    """Equilibrium utility prices and net utilities of a quasilinear market."""
    if market.mode != QUASILINEAR:
        raise ModeMismatch("solve_quasilinear_dual expects a quasilinear market")
    beta_min = quasilinear_floor(market)
    beta, diagnostics = _solve_dual(market, beta_min, np.ones(market.n), tolerance, max_iters)
    clipped = np.clip(beta, beta_min, 1.0)
    diagnostics["bound_clip"] = float(np.abs(clipped - beta).max())
    diagnostics["objective"] = dual_objective(clipped, market)
    u_star = market.budgets / clipped
    capped = clipped > 1.0 - CAP_TOL
    u_qlme = np.where(capped, 0.0, (1.0 - clipped) * u_star)
    prices = (clipped[:, None] * market.valuations).max(axis=0)
    return EquilibriumSolution(
        mode=QUASILINEAR, beta_star=clipped, u_star=u_star, u_qlme=u_qlme,
        beta_min=beta_min, prices=prices, diagnostics=diagnostics,
    )


def solve_market(market: MarketInstance, delta0: float = 0.05,
                 tolerance: float = 1e-10, max_iters: int = 10**6) -> EquilibriumSolution:
    if market.mode == QUASILINEAR:
        return solve_quasilinear_dual(market, tolerance, max_iters)
    return solve_linear_dual(market, delta0, tolerance, max_iters)


def solve_by_averaged_updates(
    market: MarketInstance,
    delta0: float = 0.05,
    tolerance: float = 1e-10,
    max_iters: int = 20000,
) -> EquilibriumSolution:
    """Noise-free twin of the online dynamics on exact expected subgradients.

    Reuses the clamp update of the auction loop with the expectation over
    the supply in place of a sampled item. The iterate gap shrinks like the
    averaging weight 1/k, so this route is a cross-check at moderate
    accuracy, not the production oracle.
    """
    if market.is_continuum:
        market = discretize_continuum(market)
    V, s, B = market.valuations, market.item_space.supply, market.budgets
    n, m = V.shape
    lo, hi = multiplier_box(market, delta0)
    if market.mode == LINEAR:
        beta = (B + 1.0) / 2.0
    else:
        beta = (lo + 1.0) / 2.0
    g_bar = np.zeros(n)
    cols = np.arange(m)
    delta = np.inf
    iterations = 0
    for k in range(1, max_iters + 1):
        winners = np.argmax(beta[:, None] * V, axis=0)
        g = np.zeros(n)
        np.add.at(g, winners, s * V[winners, cols])
        g_bar += (g - g_bar) / k
        with np.errstate(divide="ignore"):
            target = np.where(g_bar > 0, B / np.where(g_bar > 0, g_bar, 1.0), np.inf)
        new = np.clip(target, lo, hi)
        delta = float(np.abs(new - beta).max())
        beta = new
        iterations = k
        if delta < tolerance:
            break
    diagnostics = {
        "solver": "averaged-updates",
        "iterations": iterations,
        "final_delta": delta,
        "objective": dual_objective(beta, market),
        "converged": delta < tolerance,
    }
    u_star = B / beta
    if market.mode == QUASILINEAR:
        capped = beta > 1.0 - CAP_TOL
        return EquilibriumSolution(
            mode=QUASILINEAR, beta_star=beta, u_star=u_star,
            u_qlme=np.where(capped, 0.0, (1.0 - beta) * u_star),
            beta_min=lo, diagnostics=diagnostics,
        )
    return EquilibriumSolution(mode=LINEAR, beta_star=beta, u_star=u_star,
                               diagnostics=diagnostics)


def brute_force_grid(
    market: MarketInstance,
    resolution: float = 1e-3,
    delta0: float = 0.05,
    polish: bool = True,
) -> EquilibriumSolution:
    """Exhaustive minimization of F on a shrinking grid (n <= 3 only).

    Each level evaluates a full grid in a window around the previous
    argmin, with the window wide enough (three previous grid steps) that
    the true optimum cannot escape between levels. The raw grid argmin is
    only within resolution * (1 + L/sigma)-style slack of beta*: the
    objective's kinks form valleys that are flat to first order, so the
    discrete argmin may sit several grid steps along them. ``polish``
    therefore finishes with a derivative-free simplex descent (function
    evaluations only, so the route stays independent of the dual solver);
    the raw grid point is kept in ``diagnostics["grid_point"]``.
    """
    if market.is_continuum:
        raise TooLarge("grid search needs a finite item space")
    n = market.n
    if n > 3:
        raise TooLarge(f"grid oracle supports n <= 3, got {n}")
    lo, hi = multiplier_box(market, delta0)
    B = market.budgets

    def eval_grid(axes) -> tuple[np.ndarray, float]:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        best_val = np.inf
        best_pt = pts[0]
        chunk = max(1, 2_000_000 // (n * market.m))
        for start in range(0, pts.shape[0], chunk):
            block = pts[start : start + chunk]
            envelope = (block[:, :, None] * market.valuations[None, :, :]).max(axis=1)
            vals = envelope @ market.item_space.supply - np.log(block) @ B
            k = int(np.argmin(vals))
            if vals[k] < best_val:
                best_val = float(vals[k])
                best_pt = block[k]
        return best_pt, best_val

    span = float((hi - lo).max())
    step = span / 8.0
    center = (lo + hi) / 2.0
    window = np.maximum(hi - lo, 0.0) / 2.0
    best = center
    while True:
        axes = [
            np.arange(max(lo[i], best[i] - window[i]), min(hi[i], best[i] + window[i]) + step / 2, step)
            for i in range(n)
        ]
        best, value = eval_grid(axes)
        if step <= resolution:
            break
        prev = step
        step = max(step / 4.0, resolution)
        window = np.full(n, 3.0 * prev)
    diagnostics = {"solver": "grid", "resolution": resolution,
                   "grid_point": best.copy(), "grid_objective": value}
    if polish:
        from scipy.optimize import minimize

        result = minimize(
            lambda b: dual_objective(np.clip(b, lo, hi), market),
            best, method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000},
        )
        candidate = np.clip(np.asarray(result.x, dtype=float), lo, hi)
        cand_value = dual_objective(candidate, market)
        if cand_value <= value:
            best, value = candidate, cand_value
        diagnostics["polish_evaluations"] = int(result.nfev)
    u_star = B / best
    diagnostics["objective"] = value
    if market.mode == QUASILINEAR:
        capped = best > 1.0 - CAP_TOL
        return EquilibriumSolution(
            mode=QUASILINEAR, beta_star=best, u_star=u_star,
            u_qlme=np.where(capped, 0.0, (1.0 - best) * u_star),
            beta_min=lo, diagnostics=diagnostics,
        )
    return EquilibriumSolution(mode=LINEAR, beta_star=best, u_star=u_star,
                               diagnostics=diagnostics)


def discretize_continuum(market: MarketInstance, cells: int = 10_000) -> MarketInstance:
    """Finite stand-in for a continuum market: uniform cells, midpoint values.

    For linear valuations the midpoint equals the cell average, so the only
    discretization error comes from cells straddling winner boundaries;
    mesh-refinement agreement is checked in the tests rather than bounded
    a priori.
    """
    if not market.is_continuum:
        raise ModeMismatch("discretize_continuum expects a continuum market")
    space = market.item_space
    mids = (np.arange(cells) + 0.5) / cells
    V = space.slopes[:, None] * mids[None, :] + space.intercepts[:, None]
    supply = np.full(cells, 1.0 / cells)
    return MarketInstance(market.budgets, V, FiniteItemSpace(supply),
                          mode=market.mode, normalized=market.normalized)


# ---------------------------------------------------------------------------
# KKT verification


@dataclass(frozen=True)
class KktReport:
    """Residuals of the equilibrium optimality system.

    All residuals are nonnegative; ``passed`` means every one of them is
    below the tolerance. ``budget_residual`` is per buyer (capped
    quasilinear buyers may underspend, so only overspending counts there),
    ``slackness_residual`` is the quasilinear complementary-slackness term
    |delta_i (1 - beta_i)| and is identically zero in linear mode.
    """

    tolerance: float
    price_residual: float
    budget_residual: np.ndarray
    utility_residual: np.ndarray
    clearance_residual: float
    slackness_residual: np.ndarray
    bounds_residual: float
    transport_residual: float

    @property
    def worst(self) -> float:
        return float(max(
            self.price_residual,
            self.budget_residual.max(initial=0.0),
            self.utility_residual.max(initial=0.0),
            self.clearance_residual,
            self.slackness_residual.max(initial=0.0),
            self.bounds_residual,
            self.transport_residual,
        ))

    @property
    def passed(self) -> bool:
        return self.worst < self.tolerance


def kkt_check(market: MarketInstance, solution: EquilibriumSolution,
              tolerance: float = 1e-6) -> KktReport:
    """Verify a solution against the market's optimality conditions.

    A primal allocation is recovered by proportional transportation on the
    winner graph; PrimalRecoveryFailed signals a graph on which no
    budget-exact allocation can exist at all (an inaccurate beta*).
    """
    work = discretize_continuum(market) if market.is_continuum else market
    beta = solution.beta_star
    V, s, B = work.valuations, work.item_space.supply, work.budgets
    prices = (beta[:, None] * V).max(axis=0)
    price_residual = 0.0
    if solution.prices is not None and solution.prices.shape == prices.shape:
        price_residual = float(np.abs(solution.prices - prices).max())

    quasilinear = solution.mode == QUASILINEAR
    capped = solution.capped if quasilinear else None
    tied, _, _ = _winner_graph(beta, V)
    money = s * prices
    Y, transport_residual = _transport(B, money, tied, capped)

    spent = Y.sum(axis=1)
    # gross utility of the recovered allocation: sum_j v_ij * x_ij with x = Y / p
    X = np.divide(Y, prices[None, :], out=np.zeros_like(Y), where=prices[None, :] > 0)
    gross = (V * X).sum(axis=1)

    u_star = B / beta
    if quasilinear:
        budget_residual = np.where(capped, np.maximum(spent - B, 0.0), np.abs(spent - B))
        slack = np.maximum(u_star - gross, 0.0)
        utility_residual = np.where(capped, np.maximum(gross - u_star, 0.0),
                                    np.abs(gross - u_star))
        slackness_residual = slack * (1.0 - beta)
        lo = solution.beta_min if solution.beta_min is not None else quasilinear_floor(work)
        bounds_residual = float(np.maximum(lo - beta, beta - 1.0).max(initial=0.0))
    else:
        budget_residual = np.abs(spent - B)
        utility_residual = np.abs(gross - u_star)
        slackness_residual = np.zeros(work.n)
        bounds_residual = float(np.maximum(B - beta, beta - 1.0).max(initial=0.0))

    clearance_residual = float(np.abs(Y.sum(axis=0) - money).max(initial=0.0))
    return KktReport(
        tolerance=tolerance,
        price_residual=price_residual,
        budget_residual=budget_residual,
        utility_residual=utility_residual,
        clearance_residual=clearance_residual,
        slackness_residual=slackness_residual,
        bounds_residual=bounds_residual,
        transport_residual=transport_residual,
    )


class EquilibriumSolver(BaseEstimator):
    """Estimator facade: fit a market, expose beta*, u* and prices.

    ``predict(items)`` evaluates equilibrium prices of items (indices for
    finite markets, points of [0, 1] for continuum ones).
    """

    def __init__(self, delta0: float = 0.05, tolerance: float = 1e-10,
                 max_iters: int = 10**6, cells: int = 10_000):
        self.delta0 = delta0
        self.tolerance = tolerance
        self.max_iters = max_iters
        self.cells = cells

    def fit(self, market: MarketInstance, y=None):
        if market.mode == QUASILINEAR:
            solution = solve_quasilinear_dual(market, self.tolerance, self.max_iters)
        else:
            solution = solve_linear_dual(market, self.delta0, self.tolerance,
                                         self.max_iters, self.cells)
        self.market_ = market
        self.solution_ = solution
        self.beta_star_ = solution.beta_star
        self.u_star_ = solution.u_star
        self.u_qlme_ = solution.u_qlme
        return self

    def predict(self, items) -> np.ndarray:
        price = price_function(self.solution_, self.market_)
        return np.array([price(item) for item in np.atleast_1d(items)])
