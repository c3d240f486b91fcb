"""Max-linear predictors fitted by minimizing a penalized empirical excursion metric."""

from .forecast import (
    StepForecast,
    extension_sites,
    forecast_field_2d,
    forecast_path,
    forecast_steps,
    learning_translations,
    nearest_sites,
)
from .optimize import (
    OptimResult,
    Weights,
    analytic_psi1,
    bootstrap_Y,
    draw_bootstrap_indices,
    grad_phi,
    grad_q,
    max_linear,
    sgd_minimize,
    target_phi,
)
from .problem import ForecastProblem, OptimizerConfig, Variant, build_learning_samples

__all__ = [
    "StepForecast",
    "extension_sites",
    "forecast_field_2d",
    "forecast_path",
    "forecast_steps",
    "learning_translations",
    "nearest_sites",
    "OptimResult",
    "Weights",
    "analytic_psi1",
    "bootstrap_Y",
    "draw_bootstrap_indices",
    "grad_phi",
    "grad_q",
    "max_linear",
    "sgd_minimize",
    "target_phi",
    "ForecastProblem",
    "OptimizerConfig",
    "Variant",
    "build_learning_samples",
]
