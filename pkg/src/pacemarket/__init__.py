"""Online Fisher-market pacing dynamics, equilibrium oracles and metrics."""

from .arrivals import (
    ArrivalStream,
    adversarial_sequence,
    replay_from_file,
    sample_iid_continuum,
    sample_iid_finite,
)
from .engine import (
    PaceConfig,
    PaceDynamics,
    PaceEngine,
    PaceState,
    StepObservation,
    bids,
    run,
    select_winner,
)
from .market import (
    ContinuumItemSpace,
    FiniteItemSpace,
    MarketInstance,
    continuum_market,
    normalize_market,
    proportional_share_utilities,
)
from .metrics import (
    MetricAccumulator,
    TheoreticalConstants,
    TraceRow,
    bound_envelopes,
    envy_vector,
    hindsight_utility,
    relative_error_norms,
)
from .oracle import (
    EquilibriumSolution,
    EquilibriumSolver,
    KktReport,
    brute_force_grid,
    discretize_continuum,
    kkt_check,
    price_function,
    solve_by_averaged_updates,
    solve_linear_dual,
    solve_market,
    solve_quasilinear_dual,
)
from .experiment import ExperimentConfig, run_adversarial, run_experiment
from .synth import generate_synthetic

__all__ = [
    "ArrivalStream",
    "ContinuumItemSpace",
    "EquilibriumSolution",
    "EquilibriumSolver",
    "ExperimentConfig",
    "FiniteItemSpace",
    "KktReport",
    "MarketInstance",
    "MetricAccumulator",
    "PaceConfig",
    "PaceDynamics",
    "PaceEngine",
    "PaceState",
    "StepObservation",
    "TheoreticalConstants",
    "TraceRow",
    "adversarial_sequence",
    "bids",
    "bound_envelopes",
    "brute_force_grid",
    "continuum_market",
    "discretize_continuum",
    "envy_vector",
    "generate_synthetic",
    "hindsight_utility",
    "kkt_check",
    "normalize_market",
    "price_function",
    "proportional_share_utilities",
    "relative_error_norms",
    "replay_from_file",
    "run",
    "run_adversarial",
    "run_experiment",
    "sample_iid_continuum",
    "sample_iid_finite",
    "select_winner",
    "solve_by_averaged_updates",
    "solve_linear_dual",
    "solve_market",
    "solve_quasilinear_dual",
]

__version__ = "0.1.0"
