"""Multi-task (group) Lasso estimation with cross-task debiasing.

The package fits the row-sparse multi-task Lasso, computes the T x T
interaction matrix that generalizes the Lasso degrees-of-freedom count to
several tasks, and builds normal confidence intervals and chi-square
confidence ellipsoids for rows of the coefficient matrix, with or without
knowledge of the design covariance.  A Monte-Carlo engine validates the
pivotal statistics empirically.
"""

from .core import (
    ProblemData,
    RegularizationSpec,
    InferenceTarget,
    group_norm_21,
    default_lambda,
    load_matrix,
    save_matrix,
)
from .solver import SolverOptions, LassoFit, fit_multitask_lasso, kkt_residual, support
from .interaction import (
    InteractionMatrix,
    hessian_block,
    interaction_naive,
    interaction_fast,
    correction_matrix,
)
from .nodewise import NodewiseFit, fit_nodewise, tau_alternatives
from .inference import (
    NormalInterval,
    EllipsoidRegion,
    PivotReport,
    chi_quantile,
    normalize_direction,
    sigma_hat,
    ci_known_sigma,
    ci_unknown_sigma,
    ellipsoid_known_sigma,
    ellipsoid_sigma_hat,
    ellipsoid_unknown_sigma,
    test_row_null,
    single_task_interval,
    width_comparison,
)
from .simulation import SimConfig, GroundTruth, run_monte_carlo

__version__ = "0.1.0"

__all__ = [
    "ProblemData",
    "RegularizationSpec",
    "InferenceTarget",
    "group_norm_21",
    "default_lambda",
    "load_matrix",
    "save_matrix",
    "SolverOptions",
    "LassoFit",
    "fit_multitask_lasso",
    "kkt_residual",
    "support",
    "InteractionMatrix",
    "hessian_block",
    "interaction_naive",
    "interaction_fast",
    "correction_matrix",
    "NodewiseFit",
    "fit_nodewise",
    "tau_alternatives",
    "NormalInterval",
    "EllipsoidRegion",
    "PivotReport",
    "chi_quantile",
    "normalize_direction",
    "sigma_hat",
    "ci_known_sigma",
    "ci_unknown_sigma",
    "ellipsoid_known_sigma",
    "ellipsoid_sigma_hat",
    "ellipsoid_unknown_sigma",
    "test_row_null",
    "single_task_interval",
    "width_comparison",
    "SimConfig",
    "GroundTruth",
    "run_monte_carlo",
    "__version__",
]
