"""LOCO lasso-path variable importance, screening and bootstrap tests."""

from __future__ import annotations

from .cv import AdaptiveFit, adaptive_lasso, cv_lasso, least_squares_fit
from .inference import (
    BootstrapConfig,
    PermutationInterval,
    TestOutcome,
    bootstrap_replicate,
    bootstrap_test,
    importance_intervals,
    permutation_interval,
    residuals_from_initial,
    single_coefficient_test,
)
from .metric import (
    ImportanceReport,
    NormSpec,
    loco_statistic,
    loco_statistics,
    merged_knots,
    normalized_importance,
    null_statistic,
    path_distance,
    segment_abs_power_integral,
)
from .path import Dataset, Hypothesis, SolutionPath, eval_path, lasso_path, soft_threshold
from .screening import ScreeningReport, Threshold, TopK, screen
from .sim import (
    SimDesign,
    SimResult,
    experiment_power,
    experiment_screening,
    experiment_size,
    f_test_pvalue,
    gen_dataset,
    sis_rank,
    t_test_pvalue,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveFit",
    "BootstrapConfig",
    "Dataset",
    "Hypothesis",
    "ImportanceReport",
    "NormSpec",
    "PermutationInterval",
    "ScreeningReport",
    "SimDesign",
    "SimResult",
    "SolutionPath",
    "TestOutcome",
    "Threshold",
    "TopK",
    "adaptive_lasso",
    "bootstrap_replicate",
    "bootstrap_test",
    "cv_lasso",
    "eval_path",
    "experiment_power",
    "experiment_screening",
    "experiment_size",
    "f_test_pvalue",
    "gen_dataset",
    "importance_intervals",
    "lasso_path",
    "least_squares_fit",
    "loco_statistic",
    "loco_statistics",
    "merged_knots",
    "normalized_importance",
    "null_statistic",
    "path_distance",
    "permutation_interval",
    "residuals_from_initial",
    "screen",
    "single_coefficient_test",
    "sis_rank",
    "soft_threshold",
    "t_test_pvalue",
]
