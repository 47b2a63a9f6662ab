"""Seeded synthetic data generators."""

from __future__ import annotations

from typing import Any, Mapping

import numpy as np

from ..core import Dataset, DomainError, seed_sequence
from ..losses import sigmoid
from .peruggia import peruggia_design

__all__ = ["generate_data", "DATA_KINDS"]

DATA_KINDS = ("location", "logistic", "outlier_regression")


def _location(params, n, rng):
    theta = np.atleast_1d(np.asarray(params.get("theta_star", [0.0]), dtype=float))
    errors = params.get("errors", "gaussian")
    if errors == "gaussian":
        eps = rng.standard_normal((n, theta.size))
    elif errors == "laplace":
        # unit variance: Var = 2 b^2
        eps = rng.laplace(0.0, 1.0 / np.sqrt(2.0), size=(n, theta.size))
    else:
        raise DomainError(f"unknown error distribution {errors!r}")
    X = theta + eps
    return Dataset(X, tuple(f"x{j}" for j in range(theta.size)))


def _logistic(params, n, rng):
    theta = np.asarray(params.get("theta_star", [0.0, 1.0, -1.0, 0.5, 0.5]), dtype=float)
    q = theta.size - 1
    design = np.column_stack([np.ones(n), rng.standard_normal((n, q))])
    labels = (rng.random(n) < sigmoid(design @ theta)).astype(float)
    columns = ("intercept", *(f"x{j}" for j in range(1, q + 1)), "label")
    return Dataset(np.column_stack([design, labels]), columns, "label")


def _outlier(params, n, rng):
    R = float(params.get("R", 1.0))
    b0 = float(params.get("beta0", 0.0))
    b1 = float(params.get("beta1", 1.0))
    sigma = float(params.get("sigma", 1.0))
    x = peruggia_design(n, R)
    y = b0 + b1 * x + sigma * rng.standard_normal(n)
    return Dataset(np.column_stack([x, y]), ("x", "y"), "y")


def generate_data(kind: str, params: Mapping[str, Any] | None, n: int, seed: int) -> Dataset:
    """Draw a synthetic dataset.

    ``location``: ``X_i = theta_star + eps_i`` with standard-normal or
    unit-variance Laplace errors (``params["errors"]``).
    ``logistic``: intercept plus standard-normal covariates, labels
    ``Bernoulli(sigmoid(x' theta_star))``; rows are ``(1, x..., label)``.
    ``outlier_regression``: fixed design with ``x_n = R``, Gaussian responses.
    """
    if n < 1:
        raise DomainError("n must be positive")
    params = dict(params or {})
    rng = seed_sequence(seed)
    if kind == "location":
        return _location(params, n, rng)
    if kind == "logistic":
        return _logistic(params, n, rng)
    if kind == "outlier_regression":
        return _outlier(params, n, rng)
    raise DomainError(f"unknown data kind {kind!r}; expected one of {DATA_KINDS}")
