"""Tempered logistic-regression quasi-posterior for one-posterior-sample learners."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset, DomainError
from ..losses import log_sigmoid

__all__ = ["LogisticQuasiModel", "logistic_logdensity", "logistic_model_from_dataset"]


@dataclass(frozen=True)
class LogisticQuasiModel:
    """Quasi-posterior ``exp(beta * loglik) * N(0, I)`` over the coefficients.

    ``design`` already contains the intercept column when one is wanted.
    """

    beta: float
    design: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        design = np.atleast_2d(np.asarray(self.design, dtype=float))
        labels = np.asarray(self.labels, dtype=float).ravel()
        if self.beta <= 0:
            raise DomainError("beta must be positive")
        if not np.all(np.isfinite(design)):
            raise DomainError("design must be finite")
        if labels.shape[0] != design.shape[0] or not np.all((labels == 0) | (labels == 1)):
            raise DomainError("labels must be a 0/1 vector with one entry per design row")
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "labels", labels)

    @property
    def p(self) -> int:
        return self.design.shape[1]


def logistic_logdensity(model: LogisticQuasiModel, theta) -> float:
    """Unnormalized log quasi-posterior density at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    z = model.design @ theta
    y = model.labels
    loglik = float(np.sum(y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z)))
    return model.beta * loglik - 0.5 * float(theta @ theta)


def logistic_model_from_dataset(dataset: Dataset, beta: float) -> LogisticQuasiModel:
    """Rows are ``(1, covariates..., label)``."""
    return LogisticQuasiModel(beta, dataset.rows[:, :-1], dataset.rows[:, -1])
