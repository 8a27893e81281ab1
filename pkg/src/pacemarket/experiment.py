"""Multi-seed experiment orchestration and trace aggregation."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .arrivals import (
    adversarial_sequence,
    replay_from_file,
    sample_iid_continuum,
    sample_iid_finite,
)
from .dataio import (
    fmt,
    write_aggregate_csv,
    write_equilibrium_json,
    write_trace_csv,
)
from .engine import PaceConfig, PaceEngine
from .errors import PaceMarketError
from .market import LINEAR, MarketInstance, proportional_share_utilities
from .metrics import MetricAccumulator, TraceRow, default_checkpoints
from .oracle import EquilibriumSolution, solve_market
from .synth import adversarial_hindsight_equilibrium


@dataclass
class ExperimentConfig:
    """One experiment: a market, a horizon, seeds and output paths.

    ``epochs`` counts n-step epochs; ``steps`` overrides it with an absolute
    horizon. ``arrivals`` is "iid", "adversarial" or "file:PATH".
    """

    market: MarketInstance
    out_dir: str | Path
    epochs: int | None = 100
    steps: int | None = None
    seeds: tuple = (0,)
    delta0: float = 0.05
    arrivals: str = "iid"
    track_regret: bool = True
    jobs: int = 1
    oracle_tolerance: float = 1e-10
    oracle_cells: int = 10_000
    checkpoints: tuple | None = None

    def horizon(self) -> int:
        if self.steps is not None:
            return int(self.steps)
        if self.epochs is None:
            raise ValueError("need epochs or steps")
        return int(self.epochs) * self.market.n

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        if self.horizon() < 1:
            raise ValueError("horizon must be at least one step")


def _make_stream(config: ExperimentConfig, seed: int):
    market = config.market
    spec = config.arrivals
    if spec == "iid":
        if market.is_continuum:
            return sample_iid_continuum(seed)
        return sample_iid_finite(seed, market.item_space.supply)
    if spec == "adversarial":
        return adversarial_sequence(market.n, config.horizon())
    if spec.startswith("file:"):
        path = spec[len("file:"):]
        return replay_from_file(path, item_count=market.m,
                                continuum=market.is_continuum)
    raise ValueError(f"unknown arrivals spec {spec!r}")


def _run_one_seed(config: ExperimentConfig, solution: EquilibriumSolution,
                  seed: int) -> list[TraceRow]:
    market = config.market
    engine = PaceEngine(market, PaceConfig(
        horizon=config.horizon(), delta0=config.delta0,
        track_ledger=config.track_regret,
    ))
    accumulator = MetricAccumulator(
        market, solution, delta0=config.delta0,
        checkpoints=config.checkpoints, track_regret=config.track_regret,
    )
    engine.run(_make_stream(config, seed), observers=(accumulator,))
    rows = [replace(row, seed=seed) for row in accumulator.rows]
    return rows


def _seed_worker(payload):
    config, solution, seed = payload
    return seed, _run_one_seed(config, solution, seed)


@dataclass
class ExperimentResult:
    out_dir: Path
    solution: EquilibriumSolution
    per_seed_rows: dict
    aggregate_path: Path
    trace_paths: dict


def aggregate_rows(per_seed_rows: dict) -> tuple[list[int], dict]:
    """Mean and standard error of every metric column across seeds.

    The standard error is the sample deviation over sqrt(#seeds); a single
    seed yields zero.
    """
    seeds = sorted(per_seed_rows)
    first = per_seed_rows[seeds[0]]
    checkpoints = [row.t for row in first]
    for seed in seeds:
        if [row.t for row in per_seed_rows[seed]] != checkpoints:
            raise PaceMarketError("seeds produced different checkpoint schedules")
    metric_cols = [c for c in TraceRow.columns() if c not in ("t", "seed")]
    stats = {}
    k = len(seeds)
    for col in metric_cols:
        data = np.array([[getattr(row, col) for row in per_seed_rows[seed]]
                         for seed in seeds], dtype=float)
        means = data.mean(axis=0)
        if k > 1:
            sems = data.std(axis=0, ddof=1) / math.sqrt(k)
        else:
            sems = np.zeros(len(checkpoints))
        stats[col] = (means, sems)
    return checkpoints, stats


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Solve the oracle once, run every seed, write traces and aggregates.

    Writes per-seed trace CSVs, an aggregate CSV with mean and standard
    error per checkpoint, the equilibrium JSON and the proportional-share
    baseline. A failing oracle aborts before any simulation; a failing seed
    aborts the whole experiment with a report naming it.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    market = config.market
    solution = solve_market(market, delta0=config.delta0,
                            tolerance=config.oracle_tolerance)

    if config.checkpoints is None:
        config = replace(
            config,
            checkpoints=tuple(default_checkpoints(market.n, config.horizon())),
        )

    seeds = sorted(config.seeds)
    jobs = _effective_jobs(config.jobs)
    per_seed_rows = {}
    failures = []
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for seed, rows in pool.map(_seed_worker,
                                       [(config, solution, s) for s in seeds]):
                per_seed_rows[seed] = rows
    else:
        for seed in seeds:
            try:
                per_seed_rows[seed] = _run_one_seed(config, solution, seed)
            except Exception as exc:  # noqa: BLE001 - report which seed failed
                failures.append((seed, exc))
    if failures:
        detail = "; ".join(f"seed {s}: {e}" for s, e in failures)
        raise PaceMarketError(f"{len(failures)} seed(s) failed: {detail}")

    trace_paths = {}
    for seed in seeds:
        path = out_dir / f"trace_seed{seed}.csv"
        write_trace_csv(path, per_seed_rows[seed])
        trace_paths[seed] = path
    checkpoints, stats = aggregate_rows(per_seed_rows)
    aggregate_path = out_dir / "aggregate.csv"
    write_aggregate_csv(aggregate_path, checkpoints, stats)
    write_equilibrium_json(out_dir / "equilibrium.json", solution)
    if market.mode == LINEAR:
        u_prop, ratio = proportional_share_utilities(market, solution)
        baseline = {
            "u_prop": [float(u) for u in u_prop],
            "fraction_of_equilibrium": [float(r) for r in ratio],
            "avg_rel_deviation": float(np.abs(u_prop / solution.u_star - 1.0).mean()),
            "max_rel_deviation": float(np.abs(u_prop / solution.u_star - 1.0).max()),
        }
        (out_dir / "baseline.json").write_text(
            json.dumps(baseline, indent=2, sort_keys=True) + "\n"
        )
    return ExperimentResult(
        out_dir=out_dir, solution=solution, per_seed_rows=per_seed_rows,
        aggregate_path=aggregate_path, trace_paths=trace_paths,
    )


def _effective_jobs(jobs: int) -> int:
    env = os.environ.get("PACE_JOBS")
    if env:
        return max(1, int(env))
    return max(1, jobs)


def run_adversarial(market: MarketInstance, horizon: int, adversary_value: float,
                    delta0: float = 0.05) -> dict:
    """Run the starvation arrivals and report the targeted buyer's outcome."""
    engine = PaceEngine(market, PaceConfig(horizon=horizon, delta0=delta0,
                                           track_ledger=False))
    stream = adversarial_sequence(market.n, horizon)
    state = engine.run(stream)
    target = stream.target
    realized = state.cumulative_gross_utilities.copy()
    hindsight = adversarial_hindsight_equilibrium(market.n, adversary_value,
                                                  horizon, target)
    return {
        "target": target,
        "horizon": horizon,
        "realized_utility": realized,
        "realized_target_utility": float(realized[target]),
        "starvation_threshold": horizon / (2 * market.n),
        "hindsight_target_utility": float(hindsight["u_star"][target]),
        "utility_ratio": float(realized[target] / hindsight["u_star"][target]),
        "hindsight": hindsight,
    }


def write_adversarial_report(path, report: dict):
    def num(x):
        return float(fmt(x))

    payload = {
        "target_buyer": report["target"],
        "horizon": report["horizon"],
        "realized_target_utility": num(report["realized_target_utility"]),
        "starvation_threshold": num(report["starvation_threshold"]),
        "hindsight_target_utility": num(report["hindsight_target_utility"]),
        "utility_ratio": num(report["utility_ratio"]),
        "realized_utilities": [num(u) for u in report["realized_utility"]],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
