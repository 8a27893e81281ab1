"""Arrival streams feeding items to the auction loop.

Streams are single-owner and advanced one item at a time. Seeded streams
use numpy's PCG64 generator, so a (seed, step) pair fully determines the
draw on every platform. Streams never mutate engine or market state; the
adaptive adversary only reads a view of realized utilities.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import AllocationViewMissing, ParseError, StreamExhausted


class ArrivalStream:
    """Contract: ``next_item(view)`` returns the next item or raises StreamExhausted.

    ``view`` exposes the engine's read-only state; only the adversarial
    stream looks at it.
    """

    def next_item(self, view=None):
        raise NotImplementedError


class FiniteIIDStream(ArrivalStream):
    """I.i.d. draws from a finite supply distribution via inverse CDF."""

    def __init__(self, seed: int, supply):
        s = np.asarray(supply, dtype=float)
        total = s.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError("supply must be a probability vector")
        self._cdf = np.cumsum(s)
        self._m = s.size
        self._rng = np.random.default_rng(seed)

    def next_item(self, view=None) -> int:
        u = self._rng.random()
        j = int(np.searchsorted(self._cdf, u, side="right"))
        return min(j, self._m - 1)


class ContinuumIIDStream(ArrivalStream):
    """I.i.d. uniform draws from [0, 1)."""

    def __init__(self, seed: int):
        self._rng = np.random.default_rng(seed)

    def next_item(self, view=None) -> float:
        return float(self._rng.random())


def sample_iid_finite(seed: int, supply) -> FiniteIIDStream:
    return FiniteIIDStream(seed, supply)


def sample_iid_continuum(seed: int) -> ContinuumIIDStream:
    return ContinuumIIDStream(seed)


class AdversarialStream(ArrivalStream):
    """Adaptive arrivals that starve one buyer of the common item.

    Against the (n+1)-item construction where item 0 is worth 1 to everyone
    and item j in 1..n is worthless to buyer n-j (worth M to the rest):
    the stream emits item 0 for the first half of the horizon, then finds a
    buyer whose realized utility is at most T/(2n) (lowest index on ties)
    and emits that buyer's worthless item for the remaining steps.
    """

    def __init__(self, n: int, horizon: int):
        if horizon % 2 != 0:
            raise ValueError("horizon must be even")
        self.n = n
        self.horizon = horizon
        self.target: int | None = None
        self._emitted = 0

    def next_item(self, view=None) -> int:
        t = self._emitted
        if t >= self.horizon:
            raise StreamExhausted("adversarial stream past its horizon")
        self._emitted += 1
        if t < self.horizon // 2:
            return 0
        if self.target is None:
            if view is None:
                raise AllocationViewMissing(
                    "adversarial stream needs the engine's realized-utility view"
                )
            realized = np.asarray(view.cumulative_gross_utilities)
            threshold = self.horizon / (2 * self.n)
            lagging = np.nonzero(realized <= threshold)[0]
            self.target = int(lagging[0]) if lagging.size else int(np.argmin(realized))
        return self.n - self.target


def adversarial_sequence(n: int, horizon: int) -> AdversarialStream:
    return AdversarialStream(n, horizon)


class ReplayStream(ArrivalStream):
    """Deterministic replay of a recorded item sequence."""

    def __init__(self, items):
        self._items = list(items)
        self._pos = 0

    def __len__(self) -> int:
        return len(self._items)

    def next_item(self, view=None):
        if self._pos >= len(self._items):
            raise StreamExhausted("replay file exhausted")
        item = self._items[self._pos]
        self._pos += 1
        return item


def replay_from_file(path, item_count: int | None = None, continuum: bool = False) -> ReplayStream:
    """Load a replay stream: one item index (or theta in [0,1]) per line.

    The whole file is validated eagerly so parse errors carry line numbers.
    ``item_count`` bounds finite indices; out-of-range entries are rejected.
    """
    items = []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if continuum:
            try:
                theta = float(line)
            except ValueError:
                raise ParseError(f"not a decimal: {line!r}", lineno) from None
            if not 0.0 <= theta <= 1.0:
                raise ParseError(f"theta {theta} outside [0, 1]", lineno)
            items.append(theta)
        else:
            try:
                j = int(line)
            except ValueError:
                raise ParseError(f"not an item index: {line!r}", lineno) from None
            if j < 0 or (item_count is not None and j >= item_count):
                raise ParseError(f"item index {j} out of range", lineno)
            items.append(j)
    return ReplayStream(items)
