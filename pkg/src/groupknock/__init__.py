"""Group-knockoff feature selection with group-wise FDR control."""

from .config import ExperimentConfig, build_experiment_config, parse_config_file
from .errors import (
    DegenerateCovariance,
    DegenerateInput,
    DimensionMismatch,
    EmptyInput,
    GroupKnockError,
    InvalidCounts,
    InvalidLevel,
    NonConvergence,
    NotPositiveDefinite,
    NumericalDivergence,
    ParseError,
)
from .filtering import SelectionResult, knockoff_threshold, select_groups
from .knockoffs import (
    AugmentedDesign,
    GroupPartition,
    KnockoffSpec,
    equicorrelated_s,
    estimate_covariance,
    group_block_s,
    joint_covariance,
    sample_group_knockoffs,
    standardize_columns,
    strict_pd_shrink,
)
from .lasso import LassoFit, fit_lasso, group_lcd_statistic, lcd_statistic
from .linalg import (
    CovarianceMatrix,
    LowerTriangularFactor,
    cholesky,
    inverse_sqrt,
    min_eigenvalue,
    sample_mvn,
)
from .metrics import ReplicationOutcome, aggregate, fdp_tpr, hypergeom_tail
from .network import (
    GroupImportance,
    NetworkWeights,
    TrainConfig,
    forward,
    group_importance,
    init_network,
    train,
)
from .runner import run_experiment, run_selection
from .simulate import SimDataset, SimDesign, gen_coefficients, gen_dataset, gen_response, make_covariance

__version__ = "0.1.0"

__all__ = [
    "AugmentedDesign",
    "CovarianceMatrix",
    "DegenerateCovariance",
    "DegenerateInput",
    "DimensionMismatch",
    "EmptyInput",
    "ExperimentConfig",
    "GroupImportance",
    "GroupKnockError",
    "GroupPartition",
    "InvalidCounts",
    "InvalidLevel",
    "KnockoffSpec",
    "LassoFit",
    "LowerTriangularFactor",
    "NetworkWeights",
    "NonConvergence",
    "NotPositiveDefinite",
    "NumericalDivergence",
    "ParseError",
    "ReplicationOutcome",
    "SelectionResult",
    "SimDataset",
    "SimDesign",
    "TrainConfig",
    "aggregate",
    "build_experiment_config",
    "cholesky",
    "equicorrelated_s",
    "estimate_covariance",
    "fdp_tpr",
    "fit_lasso",
    "forward",
    "gen_coefficients",
    "gen_dataset",
    "gen_response",
    "group_block_s",
    "group_importance",
    "group_lcd_statistic",
    "hypergeom_tail",
    "init_network",
    "inverse_sqrt",
    "joint_covariance",
    "knockoff_threshold",
    "lcd_statistic",
    "make_covariance",
    "min_eigenvalue",
    "parse_config_file",
    "run_experiment",
    "run_selection",
    "sample_group_knockoffs",
    "sample_mvn",
    "select_groups",
    "standardize_columns",
    "strict_pd_shrink",
    "train",
]
