"""Transfer group sparse regression for cross-domain classification.

Group-sparse linear regression onto one-hot labels with a mean-discrepancy
penalty between a labeled source domain and an unlabeled target domain,
solved by an inexact augmented Lagrangian iteration that keeps exactly
``kappa`` feature groups (facial regions) alive.
"""

from tgsr.grouped_data import (
    DataError,
    DomainPair,
    GroupedFeatureMatrix,
    GroupLayout,
    LabelMatrix,
    build_grid_layout,
    group_slice,
    load_domain_pair,
    save_domain_pair,
    standardize_pair,
)
from tgsr.problem import (
    AugmentedProblem,
    ObjectiveBreakdown,
    build_augmented_problem,
    mmd_value,
    objective_breakdown,
)
from tgsr.solver import (
    SolveResult,
    SolverError,
    SolverOptions,
    SolverState,
    converged,
    solve,
    update_C,
    update_D,
    update_multipliers,
)
from tgsr.predictor import PredictedLabel, classify, classify_batch, project_simplex, score
from tgsr.evaluation import ConfusionMatrix, accuracy, confusion, macro_f1
from tgsr.model_selection import GridResult, GridSpec, default_grid, grid_search
from tgsr.regions import RegionReport, region_report, selected_groups
from tgsr.synthetic import SyntheticSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AugmentedProblem",
    "ConfusionMatrix",
    "DataError",
    "DomainPair",
    "GridResult",
    "GridSpec",
    "GroupLayout",
    "GroupedFeatureMatrix",
    "LabelMatrix",
    "ObjectiveBreakdown",
    "PredictedLabel",
    "RegionReport",
    "SolveResult",
    "SolverError",
    "SolverOptions",
    "SolverState",
    "SyntheticSpec",
    "accuracy",
    "build_augmented_problem",
    "build_grid_layout",
    "classify",
    "classify_batch",
    "confusion",
    "converged",
    "default_grid",
    "generate",
    "grid_search",
    "group_slice",
    "load_domain_pair",
    "macro_f1",
    "mmd_value",
    "objective_breakdown",
    "project_simplex",
    "region_report",
    "save_domain_pair",
    "score",
    "selected_groups",
    "solve",
    "standardize_pair",
    "update_C",
    "update_D",
    "update_multipliers",
]
