"""Command line interface.

Subcommands:
    solve   compute equilibrium utility prices and write them as JSON
    run     simulate the pacing dynamics over seeds and write trace CSVs
    synth   generate a synthetic market CSV
    verify  check an equilibrium JSON against a market (KKT residuals)
    sweep   repeat `run` across several delta0 values
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dataio import (
    ingest_csv_market,
    read_equilibrium_json,
    write_equilibrium_json,
    write_market_csv,
    write_vector,
)
from .errors import PaceMarketError
from .experiment import (
    ExperimentConfig,
    run_adversarial,
    run_experiment,
    write_adversarial_report,
)
from .market import LINEAR, QUASILINEAR
from .oracle import kkt_check, solve_market
from .synth import KINDS, generate_synthetic

_MODES = {"linear": LINEAR, "ql": QUASILINEAR, "quasilinear": QUASILINEAR}


def _add_market_args(parser: argparse.ArgumentParser):
    parser.add_argument("--market", help="valuations CSV (or c,d continuum CSV)")
    parser.add_argument("--budgets", help="budgets file, one value per line")
    parser.add_argument("--supply", help="supply file, one value per line")
    parser.add_argument("--mode", default="linear", choices=sorted(_MODES))
    parser.add_argument("--no-normalize", action="store_true",
                        help="keep raw budgets/valuations/supply (requires sidecar files)")
    parser.add_argument("--synth", metavar="KIND",
                        help=f"generate the market instead of loading it ({', '.join(KINDS)})")
    parser.add_argument("--n", type=int, help="buyers for --synth")
    parser.add_argument("--m", type=int, help="items for --synth")
    parser.add_argument("--synth-seed", type=int, default=0)
    parser.add_argument("--value-scale", type=float, default=1.0)
    parser.add_argument("--adversary-value", type=float,
                        help="high valuation of the starvation instance")


def _load_market(args):
    if args.synth:
        if args.n is None:
            raise SystemExit("--synth needs --n")
        return generate_synthetic(
            args.synth, args.n, m=args.m, seed=args.synth_seed,
            mode=_MODES[args.mode], value_scale=args.value_scale,
            adversary_value=args.adversary_value,
        )
    if not args.market:
        raise SystemExit("need --market or --synth")
    return ingest_csv_market(
        args.market, args.budgets, args.supply,
        mode=_MODES[args.mode], normalize=not args.no_normalize,
    )


def _cmd_solve(args) -> int:
    market = _load_market(args)
    solution = solve_market(market, delta0=args.delta0, tolerance=args.tolerance)
    write_equilibrium_json(args.out, solution)
    print(f"wrote {args.out}")
    return 0


def _cmd_run(args) -> int:
    market = _load_market(args)
    if args.arrivals == "adversarial":
        horizon = args.steps if args.steps else args.epochs * market.n
        report = run_adversarial(
            market, horizon,
            adversary_value=args.adversary_value or market.n + 1,
            delta0=args.delta0,
        )
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_adversarial_report(out / "adversary_report.json", report)
        print(f"targeted buyer {report['target']}: realized "
              f"{report['realized_target_utility']:g}, hindsight equilibrium "
              f"{report['hindsight_target_utility']:g}")
        return 0
    config = ExperimentConfig(
        market=market, out_dir=args.out_dir,
        epochs=args.epochs, steps=args.steps,
        seeds=tuple(range(args.seed_base, args.seed_base + args.seeds)),
        delta0=args.delta0, arrivals=args.arrivals,
        track_regret=not args.no_regret, jobs=args.jobs,
    )
    result = run_experiment(config)
    print(f"wrote {result.aggregate_path}")
    return 0


def _cmd_synth(args) -> int:
    market = generate_synthetic(
        args.kind, args.n, m=args.m, seed=args.seed,
        mode=_MODES[args.mode], value_scale=args.value_scale,
        adversary_value=args.adversary_value,
    )
    write_market_csv(args.out, market)
    stem = Path(args.out)
    if args.sidecars and not market.is_continuum:
        write_vector(stem.with_suffix(".budgets.txt"), market.budgets)
        write_vector(stem.with_suffix(".supply.txt"), market.item_space.supply)
    print(f"wrote {args.out}")
    return 0


def _cmd_verify(args) -> int:
    market = _load_market(args)
    solution = read_equilibrium_json(args.eq)
    report = kkt_check(market, solution, tolerance=args.tolerance)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict} (worst residual {report.worst:.3e}, tolerance {args.tolerance:g})")
    print(f"  price residual      {report.price_residual:.3e}")
    print(f"  budget residual     {report.budget_residual.max():.3e}")
    print(f"  utility residual    {report.utility_residual.max():.3e}")
    print(f"  clearance residual  {report.clearance_residual:.3e}")
    print(f"  slackness residual  {report.slackness_residual.max():.3e}")
    print(f"  bounds residual     {report.bounds_residual:.3e}")
    return 0 if report.passed else 1


def _cmd_sweep(args) -> int:
    values = [float(v) for v in args.delta0s.split(",")]
    base = Path(args.out_dir)
    for delta0 in values:
        sub = argparse.Namespace(**vars(args))
        sub.delta0 = delta0
        sub.out_dir = str(base / f"delta0_{delta0:g}")
        code = _cmd_run(sub)
        if code != 0:
            return code
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pace",
        description="First-price pacing dynamics for online Fisher markets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute a static equilibrium")
    _add_market_args(p_solve)
    p_solve.add_argument("--delta0", type=float, default=0.05)
    p_solve.add_argument("--tolerance", type=float, default=1e-10)
    p_solve.add_argument("--out", required=True)
    p_solve.set_defaults(func=_cmd_solve)

    p_run = sub.add_parser("run", help="simulate the dynamics")
    _add_market_args(p_run)
    p_run.add_argument("--epochs", type=int, default=100,
                       help="horizon in n-step epochs")
    p_run.add_argument("--steps", type=int, help="absolute horizon, overrides --epochs")
    p_run.add_argument("--seeds", type=int, default=10, help="number of seeds")
    p_run.add_argument("--seed-base", type=int, default=0)
    p_run.add_argument("--delta0", type=float, default=0.05)
    p_run.add_argument("--arrivals", default="iid",
                       help="iid, adversarial, or file:PATH")
    p_run.add_argument("--out-dir", required=True)
    p_run.add_argument("--jobs", type=int, default=1,
                       help="parallel seed workers (PACE_JOBS overrides)")
    p_run.add_argument("--no-regret", action="store_true",
                       help="disable the O(n*T) hindsight ledger")
    p_run.set_defaults(func=_cmd_run)

    p_synth = sub.add_parser("synth", help="generate a synthetic market")
    p_synth.add_argument("--kind", required=True)
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--m", type=int)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--mode", default="linear", choices=sorted(_MODES))
    p_synth.add_argument("--value-scale", type=float, default=1.0)
    p_synth.add_argument("--adversary-value", type=float)
    p_synth.add_argument("--sidecars", action="store_true",
                         help="also write budgets/supply files")
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=_cmd_synth)

    p_verify = sub.add_parser("verify", help="KKT-check an equilibrium JSON")
    _add_market_args(p_verify)
    p_verify.add_argument("--eq", required=True)
    p_verify.add_argument("--tolerance", type=float, default=1e-6)
    p_verify.set_defaults(func=_cmd_verify)

    p_sweep = sub.add_parser("sweep", help="run across several delta0 values")
    _add_market_args(p_sweep)
    p_sweep.add_argument("--delta0s", required=True,
                         help="comma-separated delta0 values")
    p_sweep.add_argument("--epochs", type=int, default=100)
    p_sweep.add_argument("--steps", type=int)
    p_sweep.add_argument("--seeds", type=int, default=10)
    p_sweep.add_argument("--seed-base", type=int, default=0)
    p_sweep.add_argument("--arrivals", default="iid")
    p_sweep.add_argument("--out-dir", required=True)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--no-regret", action="store_true")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PaceMarketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
