"""Simulator and analysis toolkit for sequential welfare intervention policies.

A population of individuals evolves in discrete time: treated individuals
gain according to a non-decreasing return curve, untreated individuals lose
according to their decay curve, and everyone receives bounded random shocks.
The package simulates allocation policies on such populations, predicts
their long-run growth rates from the curve bounds alone, and provides the
random-walk ruin machinery those predictions rest on.
"""

from .analysis import (
    AdjustmentResult,
    BoundSet,
    IndeterminateRegimeError,
    NoPositiveRootError,
    RATE_FAMILIES,
    RatePrediction,
    RuinEstimate,
    RuinImpossibleError,
    WEIGHT_VARIANTS,
    adjustment_coefficient,
    estimate_ruin_probability,
    lundberg_bound,
    predicted_rates,
    ruin_holds,
    ruin_margin,
    survival_holds,
    survival_margin,
    weighted_welfare,
    welfare_weights,
    zeta,
)
from .curves import (
    CURVE_DIRECTIONS,
    CURVE_SHAPES,
    CurveTable,
    ResponseCurve,
    constant_curve,
    curve_bounds,
    eval_curve,
)
from .dataio import (
    ConfigError,
    RESULT_COLUMNS,
    SWEEP_COLUMNS,
    ingest_income_csv,
    load_config,
    read_results,
    read_sweep,
    write_results,
    write_results_multi,
    write_sweep,
)
from .experiments import (
    ALL_POLICY_SPECS,
    ExperimentConfig,
    GRID_DIRECTIONS,
    GRID_OUTCOMES,
    GridCell,
    GridResult,
    InfeasibleModelError,
    InitialWelfareSpec,
    ModelTemplate,
    SweepConfig,
    SweepResult,
    TrajectoryResult,
    compare_policies,
    finite_time_welfare,
    grid_preset,
    heterogeneity_sweep,
    monotonicity_grid,
    policy_rate_prediction,
    realize_model,
    reversal_preset,
    ruin_preset,
    run_trajectory,
    sample_heterogeneous_bounds,
    survival_preset,
    sweep_preset,
)
from .model import (
    ALLOCATION_MODES,
    AllocationVector,
    PopulationModel,
    PopulationState,
    step_population,
    treatment_effect,
)
from .noise import NOISE_KINDS, NoiseSpec, sample_noise
from .policies import (
    POLICY_KINDS,
    PROPORTIONAL_KINDS,
    SCORED_KINDS,
    TIE_BREAKS,
    PolicySpec,
    score_individuals,
    select_integer_allocation,
    select_proportional_allocation,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_POLICY_SPECS",
    "ALLOCATION_MODES",
    "AdjustmentResult",
    "AllocationVector",
    "BoundSet",
    "CURVE_DIRECTIONS",
    "CURVE_SHAPES",
    "ConfigError",
    "CurveTable",
    "ExperimentConfig",
    "GRID_DIRECTIONS",
    "GRID_OUTCOMES",
    "GridCell",
    "GridResult",
    "IndeterminateRegimeError",
    "InfeasibleModelError",
    "InitialWelfareSpec",
    "ModelTemplate",
    "NOISE_KINDS",
    "NoPositiveRootError",
    "NoiseSpec",
    "POLICY_KINDS",
    "PROPORTIONAL_KINDS",
    "PolicySpec",
    "PopulationModel",
    "PopulationState",
    "RATE_FAMILIES",
    "RESULT_COLUMNS",
    "RatePrediction",
    "ResponseCurve",
    "RuinEstimate",
    "RuinImpossibleError",
    "SCORED_KINDS",
    "SWEEP_COLUMNS",
    "SweepConfig",
    "SweepResult",
    "TIE_BREAKS",
    "TrajectoryResult",
    "WEIGHT_VARIANTS",
    "adjustment_coefficient",
    "compare_policies",
    "constant_curve",
    "curve_bounds",
    "estimate_ruin_probability",
    "eval_curve",
    "finite_time_welfare",
    "grid_preset",
    "heterogeneity_sweep",
    "ingest_income_csv",
    "load_config",
    "lundberg_bound",
    "monotonicity_grid",
    "policy_rate_prediction",
    "predicted_rates",
    "read_results",
    "read_sweep",
    "realize_model",
    "reversal_preset",
    "ruin_holds",
    "ruin_margin",
    "ruin_preset",
    "run_trajectory",
    "sample_heterogeneous_bounds",
    "sample_noise",
    "score_individuals",
    "select_integer_allocation",
    "select_proportional_allocation",
    "step_population",
    "survival_holds",
    "survival_margin",
    "survival_preset",
    "sweep_preset",
    "treatment_effect",
    "weighted_welfare",
    "welfare_weights",
    "write_results",
    "write_results_multi",
    "write_sweep",
    "zeta",
]
