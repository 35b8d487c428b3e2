"""Logistic regression solvers whose step sizes grow as the loss shrinks.

Greedy and fully corrective coordinate descent, loss-adaptive gradient
descent, and diagnostics for separable classification data.
"""

from .data_io import SyntheticSpec, generate_separable, load_libsvm, scale_features, separabilize
from .dense_gd import StepPolicy, default_constants, make_policy, solve_gd, variable_policy
from .diagnostics import estimator_error, max_ratio_experiment, separability_check, spectral_norm_sq
from .logistic import evaluate, gradient, hessian_quadratic_form, l2_smoothness_ratio
from .model import (
    ClassificationInstance,
    ConstantsMode,
    IterateRecord,
    LambdaPolicy,
    SmoothnessConstants,
    SolveResult,
    SolverConfig,
    Termination,
    new_instance,
)
from .sparse_cd import fully_corrective_cd, greedy_cd, restricted_minimize

__version__ = "0.1.0"

__all__ = [
    "ClassificationInstance", "ConstantsMode", "IterateRecord", "LambdaPolicy", "SmoothnessConstants",
    "SolveResult", "SolverConfig", "StepPolicy", "SyntheticSpec", "Termination",
    "default_constants", "estimator_error", "evaluate", "fully_corrective_cd", "generate_separable",
    "gradient", "greedy_cd", "hessian_quadratic_form", "l2_smoothness_ratio", "load_libsvm",
    "make_policy", "max_ratio_experiment", "new_instance", "restricted_minimize", "scale_features",
    "separability_check", "separabilize", "solve_gd", "spectral_norm_sq", "variable_policy",
]
