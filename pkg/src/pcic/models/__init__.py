"""Samplers, analytic oracles and synthetic data for the bundled experiments."""

from .data import DATA_KINDS, generate_data
from .location import (
    LocationModel,
    LocationPosterior,
    kumar_expectation,
    location_exact_draws,
    location_posterior,
    oracle_bias_term,
    oracle_expected_covariance,
    oracle_generalization_error,
    oracle_gibbs_gap,
    oracle_posterior_covariances,
    oracle_prior_covariances,
    oracle_rem,
    shrinkage_factor,
)
from .logistic import LogisticQuasiModel, logistic_logdensity, logistic_model_from_dataset
from .peruggia import (
    DRAW_COLUMNS,
    PeruggiaRegression,
    RegressionData,
    peruggia_design,
    peruggia_gibbs,
    regression_generalization_error,
)
from .samplers import default_steps, rw_metropolis

__all__ = [
    "DATA_KINDS",
    "DRAW_COLUMNS",
    "LocationModel",
    "LocationPosterior",
    "LogisticQuasiModel",
    "PeruggiaRegression",
    "RegressionData",
    "default_steps",
    "generate_data",
    "kumar_expectation",
    "location_exact_draws",
    "location_posterior",
    "logistic_logdensity",
    "logistic_model_from_dataset",
    "oracle_bias_term",
    "oracle_expected_covariance",
    "oracle_generalization_error",
    "oracle_gibbs_gap",
    "oracle_posterior_covariances",
    "oracle_prior_covariances",
    "oracle_rem",
    "peruggia_design",
    "peruggia_gibbs",
    "regression_generalization_error",
    "rw_metropolis",
    "shrinkage_factor",
]
