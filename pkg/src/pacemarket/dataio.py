"""File formats: market CSVs, budget/supply vectors, equilibrium JSON, traces.

Floats are written with 12 significant digits so repeated runs produce
byte-identical, diff-able artifacts.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError
from .market import (
    LINEAR,
    MarketInstance,
    continuum_market,
    normalize_market,
)
from .metrics import TraceRow
from .oracle import EquilibriumSolution

CONTINUUM_HEADER = ("c", "d")


def fmt(x) -> str:
    if x is None:
        return "nan"
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def _float(cell: str, lineno: int, column: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"not a number: {cell.strip()!r}", lineno, column) from None


def load_matrix_csv(path):
    """Parse a valuation CSV.

    Returns ``("finite", matrix)`` for a plain numeric matrix (an optional
    non-numeric header row is skipped) or ``("continuum", (c, d))`` when the
    file carries the two-column ``c,d`` header of linear valuations on
    [0, 1].
    """
    rows = []
    continuum = False
    width = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        cells = [c.strip() for c in line.split(",")]
        if not rows and width is None:
            lowered = tuple(c.lower() for c in cells)
            if lowered == CONTINUUM_HEADER:
                continuum = True
                width = 2
                continue
            numeric = True
            for cell in cells:
                try:
                    float(cell)
                except ValueError:
                    numeric = False
                    break
            if not numeric:
                width = len(cells)  # header row, skipped
                continue
        if width is not None and len(cells) != width:
            raise DimensionMismatch(
                f"line {lineno}: expected {width} columns, found {len(cells)}"
            )
        width = len(cells)
        rows.append([_float(c, lineno, k + 1) for k, c in enumerate(cells)])
    if not rows:
        raise ParseError("no data rows", 1)
    matrix = np.asarray(rows, dtype=float)
    if continuum:
        return "continuum", (matrix[:, 0], matrix[:, 1])
    return "finite", matrix


def load_vector(path) -> np.ndarray:
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        values.append(_float(line, lineno, 1))
    return np.asarray(values, dtype=float)


def ingest_csv_market(valuations_path, budgets_path=None, supply_path=None,
                      mode: str = LINEAR, normalize: bool = True) -> MarketInstance:
    """Load and normalize a market from files.

    Missing budgets default to equal shares 1/n; missing supply to uniform
    1/m. ``normalize=False`` keeps the raw numbers (used for deliberately
    unnormalized constructions) and requires both sidecar files.
    """
    kind, data = load_matrix_csv(valuations_path)
    if kind == "continuum":
        c, d = data
        budgets = load_vector(budgets_path) if budgets_path else None
        if budgets is not None and budgets.size != c.size:
            raise DimensionMismatch(f"{budgets.size} budgets for {c.size} buyers")
        return continuum_market(c, d, budgets)
    V = data
    n, m = V.shape
    budgets = load_vector(budgets_path) if budgets_path else np.full(n, 1.0 / n)
    supply = load_vector(supply_path) if supply_path else np.full(m, 1.0 / m)
    if budgets.size != n:
        raise DimensionMismatch(f"{budgets.size} budgets for {n} buyers")
    if supply.size != m:
        raise DimensionMismatch(f"{supply.size} supply entries for {m} items")
    if normalize:
        return normalize_market(budgets, V, supply, mode)
    from .market import FiniteItemSpace

    return MarketInstance(budgets, V, FiniteItemSpace(supply), mode=mode,
                          normalized=False)


def write_market_csv(path, market: MarketInstance):
    path = Path(path)
    if market.is_continuum:
        space = market.item_space
        lines = ["c,d"]
        lines += [f"{fmt(c)},{fmt(d)}" for c, d in zip(space.slopes, space.intercepts)]
    else:
        lines = [",".join(fmt(v) for v in row) for row in market.valuations]
    path.write_text("\n".join(lines) + "\n")


def write_vector(path, values):
    Path(path).write_text("\n".join(fmt(v) for v in values) + "\n")


def write_equilibrium_json(path, solution: EquilibriumSolution):
    payload = {
        "beta_star": [float(b) for b in solution.beta_star],
        "u_star": [float(u) for u in solution.u_star],
        "mode": solution.mode,
        "diagnostics": _plain(solution.diagnostics),
    }
    if solution.u_qlme is not None:
        payload["u_qlme"] = [float(u) for u in solution.u_qlme]
    if solution.beta_min is not None:
        payload["beta_min"] = [float(b) for b in solution.beta_min]
    if solution.prices is not None:
        payload["prices"] = [float(p) for p in solution.prices]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_equilibrium_json(path) -> EquilibriumSolution:
    payload = json.loads(Path(path).read_text())
    return EquilibriumSolution(
        mode=payload["mode"],
        beta_star=np.asarray(payload["beta_star"], dtype=float),
        u_star=np.asarray(payload["u_star"], dtype=float),
        u_qlme=np.asarray(payload["u_qlme"], dtype=float) if "u_qlme" in payload else None,
        beta_min=np.asarray(payload["beta_min"], dtype=float) if "beta_min" in payload else None,
        prices=np.asarray(payload["prices"], dtype=float) if "prices" in payload else None,
        diagnostics=payload.get("diagnostics", {}),
    )


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj]
    return obj


def write_trace_csv(path, rows: list[TraceRow]):
    cols = TraceRow.columns()
    lines = [",".join(cols)]
    for row in rows:
        cells = []
        for col in cols:
            value = getattr(row, col)
            if col == "seed":
                cells.append("" if value is None else str(value))
            elif col == "t":
                cells.append(str(int(value)))
            else:
                cells.append(fmt(value))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_aggregate_csv(path, checkpoints, stats: dict):
    """stats maps column -> (means, sems) arrays aligned with checkpoints."""
    metric_cols = [c for c in TraceRow.columns() if c not in ("t", "epoch", "seed")]
    header = ["t", "epoch"]
    for col in metric_cols:
        header += [f"{col}_mean", f"{col}_sem"]
    lines = [",".join(header)]
    epochs, _ = stats["epoch"]
    for k, t in enumerate(checkpoints):
        cells = [str(int(t)), fmt(epochs[k])]
        for col in metric_cols:
            means, sems = stats[col]
            cells += [fmt(means[k]), fmt(sems[k])]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
