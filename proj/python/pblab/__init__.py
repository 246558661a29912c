"""Composite-norm penalized regression: solvers, oracle tuning and bound checks."""

from ._pblab import (
    AssumptionViolated,
    NonConvergence,
    __version__,
    catalog,
    difference_matrix,
    dual_norm,
    fused_pinv,
    lambda_max,
    oracle_tuning,
    pseudoinverse,
    run_trial,
    slope_prox,
    soft_threshold,
    group_soft_threshold,
    solve,
)

__all__ = [
    "AssumptionViolated",
    "NonConvergence",
    "__version__",
    "catalog",
    "difference_matrix",
    "dual_norm",
    "fused_pinv",
    "group_soft_threshold",
    "lambda_max",
    "oracle_tuning",
    "pseudoinverse",
    "run_trial",
    "slope_prox",
    "soft_threshold",
    "solve",
]
