"""Threshold item response models for continuous and discretized responses."""

__version__ = "0.1.0"

from .difficulty import DifficultySpec, ItemParams, delta_eval, delta_inverse, g_derivative, g_eval, g_inverse
from .exceptions import DataError, DomainError, MomentDivergenceError, NotNestedError, NumericalError
from .families import Gompertz, Gumbel, Normal, ResponseFamily, get_family
from .kernel import (
    ModelSpec,
    ObservationMode,
    PersonContext,
    central_moment,
    density_grid,
    discrete_pmf,
    response_cdf,
    response_pdf,
    response_quantile,
    simulate,
    simulate_responses,
    survival,
    transformed_total_score,
    transformed_total_scores,
)
from .ctt import CTTReport, ctt_diagnostics
from .estimation import (
    Dataset,
    FitOptions,
    FitResult,
    LRTestResult,
    eap_scores,
    fit_mml,
    lr_test,
    marginal_loglik,
    standard_errors,
)
from .estimator import ThresholdIRT

__all__ = [name for name in dir() if not name.startswith("_")]
