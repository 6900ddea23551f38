"""Squared-loss mutual information from few pairs plus unpaired pools.

The estimator alternates two exact minimizations of one objective:
closed-form ridge fitting of a kernel density-ratio model, and entropic
optimal-transport rebalancing of a coupling over the unpaired pools.
The fitted ratio yields the SMI estimate; the fitted plan doubles as a
soft matching for correspondence and layout problems.
"""

from .data import SyntheticSpec, generate, load_table, make_semi_supervised, split_features
from .density_ratio import (
    RatioModel,
    mixed_linear_term,
    quadratic_term,
    ratio_cross,
    ratio_pairs,
    solve_alpha,
)
from .estimator import (
    EstimatorConfig,
    FitResult,
    SampleSet,
    fit,
    objective,
    smi_estimate,
    smi_estimate_paired,
)
from .kernels import (
    BasisSet,
    feature_columns,
    gaussian_gram,
    gaussian_kernel,
    median_heuristic,
    sample_basis,
)
from .matching import (
    Assignment,
    GridSpec,
    grid_summarize,
    normalize_positions,
    plan_to_assignment,
    topk_accuracy,
)
from .model_selection import CvGrid, CvReport, cross_validate, holdout_error, select_best
from .transport import (
    SinkhornParams,
    TransportPlan,
    cost_matrix,
    plan_entropy,
    sinkhorn_solve,
    uniform_plan,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "BasisSet",
    "CvGrid",
    "CvReport",
    "EstimatorConfig",
    "FitResult",
    "GridSpec",
    "RatioModel",
    "SampleSet",
    "SinkhornParams",
    "SyntheticSpec",
    "TransportPlan",
    "cost_matrix",
    "cross_validate",
    "feature_columns",
    "fit",
    "gaussian_gram",
    "gaussian_kernel",
    "generate",
    "grid_summarize",
    "holdout_error",
    "load_table",
    "make_semi_supervised",
    "median_heuristic",
    "mixed_linear_term",
    "normalize_positions",
    "objective",
    "plan_entropy",
    "plan_to_assignment",
    "quadratic_term",
    "ratio_cross",
    "ratio_pairs",
    "sample_basis",
    "select_best",
    "sinkhorn_solve",
    "smi_estimate",
    "smi_estimate_paired",
    "solve_alpha",
    "split_features",
    "topk_accuracy",
    "uniform_plan",
]
