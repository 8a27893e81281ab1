"""Market instances: buyers, budgets, valuations and the item space.

A normalized market has a unit total budget, a unit total supply and (in
linear mode) unit expected value per buyer under the supply distribution.
Quasilinear markets keep their valuation scale; budgets and valuations may
only be rescaled jointly by one common constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    ModeMismatch,
    ZeroBudget,
    ZeroSupply,
    ZeroValuationRow,
)

NORMALIZATION_TOL = 1e-12
# Rescale factors closer to 1 than this are skipped, which makes
# normalization idempotent bit-for-bit.
_RESCALE_SKIP = 1e-13

LINEAR = "linear"
QUASILINEAR = "quasilinear"
MODES = (LINEAR, QUASILINEAR)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FiniteItemSpace:
    """A finite set of items with a supply vector.

    For normalized markets the supply is a probability vector: entries are
    the arrival probabilities of the corresponding items.
    """

    supply: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "supply", _readonly(self.supply))
        if self.supply.ndim != 1 or self.supply.size == 0:
            raise ZeroSupply("supply must be a nonempty vector")
        if np.any(self.supply < 0):
            raise ZeroSupply(f"supply has a negative entry at index {int(np.argmin(self.supply))}")
        if self.supply.sum() <= 0:
            raise ZeroSupply()

    @property
    def count(self) -> int:
        return int(self.supply.size)

    def is_distribution(self, tol: float = NORMALIZATION_TOL) -> bool:
        return bool(abs(self.supply.sum() - 1.0) <= tol)


@dataclass(frozen=True)
class ContinuumItemSpace:
    """Items on [0, 1] with one linear valuation v_i(theta) = c_i*theta + d_i per buyer.

    Valuations are normalized so each buyer values the whole interval at 1
    (c_i/2 + d_i = 1) and must be nonnegative on [0, 1], which for a linear
    function reduces to nonnegative endpoints.
    """

    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "slopes", _readonly(self.slopes))
        object.__setattr__(self, "intercepts", _readonly(self.intercepts))
        c, d = self.slopes, self.intercepts
        if c.shape != d.shape or c.ndim != 1:
            raise ValueError("slopes and intercepts must be vectors of equal length")
        bad = np.nonzero(np.abs(c / 2 + d - 1.0) > NORMALIZATION_TOL)[0]
        if bad.size:
            raise ValueError(
                f"buyer {int(bad[0])}: continuum valuation not normalized (c/2 + d != 1)"
            )
        if np.any(d < 0) or np.any(c + d < 0):
            i = int(np.nonzero((d < 0) | (c + d < 0))[0][0])
            raise ZeroValuationRow(i)

    @property
    def n_buyers(self) -> int:
        return int(self.slopes.size)

    def values_at(self, theta: float) -> np.ndarray:
        return self.slopes * theta + self.intercepts


ItemSpace = Union[FiniteItemSpace, ContinuumItemSpace]


@dataclass(frozen=True)
class MarketInstance:
    """Immutable market description shared by the dynamics and the oracles.

    Attributes:
        budgets: per-buyer budgets, summing to 1 when ``normalized``.
        valuations: n x m nonnegative matrix for finite item spaces, None
            for continuum markets (valuations live in the item space).
        item_space: FiniteItemSpace or ContinuumItemSpace.
        mode: "linear" or "quasilinear".
        normalized: whether the normalization invariants are enforced.
            The adversarial construction deliberately runs unnormalized.
    """

    budgets: np.ndarray
    valuations: np.ndarray | None
    item_space: ItemSpace
    mode: str = LINEAR
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "budgets", _readonly(self.budgets))
        if self.valuations is not None:
            object.__setattr__(self, "valuations", _readonly(self.valuations))
        self._validate()

    def _validate(self):
        if self.mode not in MODES:
            raise ModeMismatch(f"unknown mode {self.mode!r}")
        B = self.budgets
        bad = np.nonzero(B <= 0)[0]
        if bad.size:
            raise ZeroBudget(int(bad[0]))
        if self.is_continuum:
            if self.valuations is not None:
                raise ValueError("continuum markets carry valuations in the item space")
            if self.mode != LINEAR:
                raise ModeMismatch("continuum item spaces support linear mode only")
            if self.item_space.n_buyers != self.n:
                raise DimensionMismatch(
                    f"{self.n} budgets for {self.item_space.n_buyers} continuum valuations"
                )
            if self.normalized and abs(B.sum() - 1.0) > NORMALIZATION_TOL:
                raise ValueError("budgets do not sum to 1")
            return
        V = self.valuations
        if V is None or V.ndim != 2:
            raise ValueError("finite markets need an n x m valuation matrix")
        if V.shape[0] != self.n or V.shape[1] != self.item_space.count:
            raise DimensionMismatch(
                f"valuations shaped {V.shape}, expected {(self.n, self.item_space.count)}"
            )
        if np.any(V < 0):
            i = int(np.nonzero((V < 0).any(axis=1))[0][0])
            raise ValueError(f"buyer {i} has a negative valuation")
        rowmax = V.max(axis=1)
        bad = np.nonzero(rowmax <= 0)[0]
        if bad.size:
            raise ZeroValuationRow(int(bad[0]))
        if not self.normalized:
            return
        if abs(B.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("budgets do not sum to 1")
        if not self.item_space.is_distribution():
            raise ZeroSupply("supply is not a probability vector")
        vs = self.expected_values()
        if self.mode == LINEAR:
            bad = np.nonzero(np.abs(vs - 1.0) > NORMALIZATION_TOL)[0]
            if bad.size:
                raise ValueError(
                    f"buyer {int(bad[0])}: <v_i, s> = {vs[bad[0]]!r}, expected 1 in linear mode"
                )
        else:
            bad = np.nonzero(vs <= 0)[0]
            if bad.size:
                raise ZeroValuationRow(int(bad[0]))

    @property
    def n(self) -> int:
        return int(self.budgets.size)

    @property
    def is_continuum(self) -> bool:
        return isinstance(self.item_space, ContinuumItemSpace)

    @property
    def m(self) -> int | None:
        return None if self.is_continuum else self.item_space.count

    def expected_values(self) -> np.ndarray:
        """Per-buyer expected value <v_i, s> of one arrival under the supply."""
        if self.is_continuum:
            # integral of c*theta + d over [0,1]
            return self.item_space.slopes / 2 + self.item_space.intercepts
        return (self.valuations * self.item_space.supply[None, :]).sum(axis=1)

    def values_of(self, item) -> np.ndarray:
        """All buyers' values of one item (an index, or theta in [0,1])."""
        if self.is_continuum:
            theta = float(item)
            if not 0.0 <= theta <= 1.0:
                raise IndexOutOfRange(f"theta {theta} outside [0, 1]")
            return self.item_space.values_at(theta)
        j = int(item)
        if not 0 <= j < self.item_space.count:
            raise IndexOutOfRange(f"item index {j} outside [0, {self.item_space.count})")
        return self.valuations[:, j]

    def value_of(self, buyer: int, item) -> float:
        if not 0 <= buyer < self.n:
            raise IndexOutOfRange(f"buyer index {buyer} outside [0, {self.n})")
        return float(self.values_of(item)[buyer])

    def value_sup(self) -> float:
        """Supremum of v_i over buyers and items (the bound used in rate constants)."""
        if self.is_continuum:
            c, d = self.item_space.slopes, self.item_space.intercepts
            return float(np.maximum(d, c + d).max())
        return float(self.valuations.max())


def normalize_market(
    raw_budgets,
    raw_valuations,
    supply,
    mode: str = LINEAR,
) -> MarketInstance:
    """Build a normalized finite market from raw data.

    Budgets are rescaled to sum to 1 and the supply to sum to 1. In linear
    mode every valuation row is rescaled so its expected value under the
    supply is 1. In quasilinear mode rows must keep their relative scale, so
    valuations are divided by the same constant as the budgets and nothing
    else.

    Raises:
        ZeroBudget, ZeroValuationRow, ZeroSupply: on infeasible raw data,
            with the offending index.
    """
    B = np.asarray(raw_budgets, dtype=float).copy()
    V = np.asarray(raw_valuations, dtype=float).copy()
    s = np.asarray(supply, dtype=float).copy()
    if V.ndim != 2:
        raise DimensionMismatch("valuations must be an n x m matrix")
    if B.ndim != 1 or B.size != V.shape[0]:
        raise DimensionMismatch(f"{B.size} budgets for {V.shape[0]} buyers")
    if s.ndim != 1 or s.size != V.shape[1]:
        raise DimensionMismatch(f"{s.size} supply entries for {V.shape[1]} items")

    bad = np.nonzero(B <= 0)[0]
    if bad.size:
        raise ZeroBudget(int(bad[0]))
    if np.any(s < 0):
        raise ZeroSupply(f"supply has a negative entry at index {int(np.argmin(s))}")
    total_supply = s.sum()
    if total_supply <= 0:
        raise ZeroSupply()
    if np.any(V < 0):
        i = int(np.nonzero((V < 0).any(axis=1))[0][0])
        raise ValueError(f"buyer {i} has a negative valuation")
    bad = np.nonzero(V.max(axis=1) <= 0)[0]
    if bad.size:
        raise ZeroValuationRow(int(bad[0]))

    def rescale(a: np.ndarray, factor: float) -> np.ndarray:
        return a if abs(factor - 1.0) <= _RESCALE_SKIP else a / factor

    total_budget = B.sum()
    s = rescale(s, total_supply)
    if mode == LINEAR:
        B = rescale(B, total_budget)
        row_scale = (V * s[None, :]).sum(axis=1)
        bad = np.nonzero(row_scale <= 0)[0]
        if bad.size:
            raise ZeroValuationRow(int(bad[0]))
        if np.max(np.abs(row_scale - 1.0)) > _RESCALE_SKIP:
            V = V / row_scale[:, None]
    elif mode == QUASILINEAR:
        # one common constant for budgets and valuations
        B = rescale(B, total_budget)
        V = rescale(V, total_budget)
        vs = (V * s[None, :]).sum(axis=1)
        bad = np.nonzero(vs <= 0)[0]
        if bad.size:
            raise ZeroValuationRow(int(bad[0]))
    else:
        raise ModeMismatch(f"unknown mode {mode!r}")
    return MarketInstance(B, V, FiniteItemSpace(s), mode=mode, normalized=True)


def continuum_market(slopes, intercepts, budgets=None) -> MarketInstance:
    """Build a normalized continuum market (linear mode).

    Budgets default to equal shares 1/n and are rescaled to sum to 1.
    """
    space = ContinuumItemSpace(np.asarray(slopes, float), np.asarray(intercepts, float))
    n = space.n_buyers
    if budgets is None:
        B = np.full(n, 1.0 / n)
    else:
        B = np.asarray(budgets, dtype=float).copy()
        bad = np.nonzero(B <= 0)[0]
        if bad.size:
            raise ZeroBudget(int(bad[0]))
        total = B.sum()
        if abs(total - 1.0) > _RESCALE_SKIP:
            B = B / total
    return MarketInstance(B, None, space, mode=LINEAR, normalized=True)


def proportional_share_utilities(market: MarketInstance, solution=None):
    """Utility of the proportional allocation (a B_i share of every item).

    Returns ``u_prop`` and, when an equilibrium solution is supplied, the
    per-buyer fractions ``u_prop / u_star`` used as baseline lines. In a
    normalized linear market ``u_prop`` equals the budget vector and lower
    bounds the equilibrium utilities.
    """
    if market.mode != LINEAR:
        raise ModeMismatch("proportional share baseline is defined for linear mode")
    u_prop = market.budgets * market.expected_values()
    if solution is None:
        return u_prop, None
    return u_prop, u_prop / solution.u_star
