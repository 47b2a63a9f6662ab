"""Posterior covariance information criteria for quasi-Bayesian predictive risk."""

from .core import (
    Dataset,
    DegenerateWeightsError,
    DimensionError,
    DomainError,
    EvalMatrix,
    Evaluator,
    NonFiniteError,
    ObservationWeights,
    PCICError,
    PosteriorDraws,
    RiskReport,
    SamplerError,
    batch_standard_error,
    build_eval_matrix,
    posterior_mean,
)
from .estimators import (
    covariance_correction,
    empirical_gibbs,
    exact_loocv,
    iscv_gibbs,
    kappa3_diagnostic,
    loocv_loss_matrix,
    pcic_gibbs,
    pcic_plugin,
    pcic_weighted,
    test_errors,
    waic2,
)
from .sensitivity import (
    SensitivityCheck,
    curvature_i2,
    finite_difference_check,
    influence_measure,
    local_sensitivity,
    weighted_expectation,
)

__version__ = "0.1.0"
