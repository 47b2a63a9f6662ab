"""Built-in losses and scores, pointwise and as batch evaluators.

Row layouts used by the evaluators:

* location data: ``row = x`` (d columns), ``theta`` a d-vector;
* classification data: ``row = (1, covariates..., label)``, ``theta`` the
  coefficient vector including the intercept;
* regression data: ``row = (x, y)``, ``theta = (b0, b1, sigma2, ...)``.
"""

from __future__ import annotations

import numpy as np

from .core import DimensionError, DomainError, Evaluator

__all__ = [
    "quadratic_loss",
    "location_score",
    "classification_losses",
    "regression_losses",
    "sigmoid",
    "log_sigmoid",
    "quadratic_evaluator",
    "location_score_evaluator",
    "classification_evaluator",
    "logistic_score_evaluator",
    "regression_evaluator",
    "gaussian_loglik_evaluator",
    "CLASSIFICATION_KINDS",
    "REGRESSION_KINDS",
]

CLASSIFICATION_KINDS = ("brier", "misclass", "spherical")
REGRESSION_KINDS = ("l2", "scaled_l1")


def sigmoid(z):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def log_sigmoid(z):
    return -np.logaddexp(0.0, -np.asarray(z, dtype=float))


def quadratic_loss(x, theta, A) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if x.shape != theta.shape or A.shape != (x.size, x.size):
        raise DimensionError(f"shapes x {x.shape}, theta {theta.shape}, A {A.shape} disagree")
    r = x - theta
    return float(r @ A @ r)


def location_score(x, theta, beta: float) -> float:
    r = np.atleast_1d(np.asarray(x, dtype=float)) - np.atleast_1d(np.asarray(theta, dtype=float))
    return float(-0.5 * beta * (r @ r))


def _check_prob(p):
    p = np.asarray(p, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)) or not np.all(np.isfinite(p)):
        raise DomainError("probabilities must lie in [0, 1]")
    return p


def _classification(kind: str, x, p):
    if kind == "brier":
        return (x - p) ** 2
    if kind == "misclass":
        hit = ((x == 1) & (p > 0.5)) | ((x == 0) & (p < 0.5))
        return np.where(hit, -1.0, 0.0)
    if kind == "spherical":
        # denominator is at least 1/sqrt(2) on [0, 1]
        return -(x * p + (1 - x) * (1 - p)) / np.sqrt(p**2 + (1 - p) ** 2)
    raise DomainError(f"unknown classification loss {kind!r}; expected one of {CLASSIFICATION_KINDS}")


def classification_losses(kind: str, x, p):
    """Brier, misclassification or spherical loss of label ``x`` under probability ``p``.

    Misclassification is -1 for a correct strict-side call and 0 otherwise,
    so ``p == 0.5`` always scores 0.
    """
    p = _check_prob(p)
    out = _classification(kind, np.asarray(x, dtype=float), p)
    return float(out) if np.ndim(out) == 0 else out


def regression_losses(kind: str, y, x, beta0, beta1, sigma):
    r = np.asarray(y, dtype=float) - beta0 - np.asarray(x, dtype=float) * beta1
    if kind == "l2":
        out = r**2
    elif kind == "scaled_l1":
        if np.any(np.asarray(sigma) <= 0):
            raise DomainError("sigma must be positive for the scaled l1 loss")
        out = np.abs(r) / sigma
    else:
        raise DomainError(f"unknown regression loss {kind!r}; expected one of {REGRESSION_KINDS}")
    return float(out) if np.ndim(out) == 0 else out


# batch evaluators ---------------------------------------------------------


def _centered_quadratic(rows, thetas, A):
    if A.shape == (1, 1):
        r = rows - thetas.T
        return A[0, 0] * (r * r)
    # (x - t)' A (x - t) expanded around the draw mean to limit cancellation
    c = thetas.mean(axis=0)
    xc = rows - c
    tc = thetas - c
    xx = np.einsum("ij,jk,ik->i", xc, A, xc)
    tt = np.einsum("ij,jk,ik->i", tc, A, tc)
    return np.maximum(xx[:, None] - 2.0 * (xc @ A @ tc.T) + tt[None, :], 0.0)


def quadratic_evaluator(A) -> Evaluator:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return Evaluator(
        pointwise=lambda row, theta: quadratic_loss(row, theta, A),
        batch=lambda rows, thetas: _centered_quadratic(rows, thetas, A),
        name="quadratic",
    )


def location_score_evaluator(beta: float, tau: float | None = None, n: int | None = None) -> Evaluator:
    """Score ``-(beta/2)|x - theta|^2``.

    With ``tau`` and ``n`` given, adds the log-prior share ``-(1/n)|theta|^2/(2 tau)``
    to every observation's score.
    """
    prior = tau is not None
    if prior and (n is None or n < 1 or tau <= 0):
        raise DomainError("the prior-augmented score needs tau > 0 and n >= 1")

    def pointwise(row, theta):
        val = location_score(row, theta, beta)
        if prior:
            theta = np.atleast_1d(theta)
            val -= float(theta @ theta) / (2.0 * tau * n)
        return val

    def batch(rows, thetas):
        d = rows.shape[1]
        out = -0.5 * beta * _centered_quadratic(rows, thetas, np.eye(d))
        if prior:
            out = out - (thetas**2).sum(axis=1)[None, :] / (2.0 * tau * n)
        return out

    return Evaluator(pointwise, batch, "location_score_prior" if prior else "location_score")


def classification_evaluator(kind: str) -> Evaluator:
    if kind not in CLASSIFICATION_KINDS:
        raise DomainError(f"unknown classification loss {kind!r}")

    def pointwise(row, theta):
        p = float(sigmoid(row[:-1] @ theta))
        return classification_losses(kind, row[-1], p)

    def batch(rows, thetas):
        p = sigmoid(rows[:, :-1] @ thetas.T)
        return _classification(kind, rows[:, -1:], p)

    return Evaluator(pointwise, batch, kind)


def logistic_score_evaluator(beta: float, n_prior: int | None = None) -> Evaluator:
    """Tempered Bernoulli log-likelihood per observation.

    The N(0, I) prior is excluded unless ``n_prior`` is given, in which case
    ``-(1/n_prior) theta'theta / 2`` is added to each observation.
    """

    def pointwise(row, theta):
        z = row[:-1] @ theta
        y = row[-1]
        val = beta * (y * log_sigmoid(z) + (1 - y) * log_sigmoid(-z))
        if n_prior:
            val -= float(theta @ theta) / (2.0 * n_prior)
        return float(val)

    def batch(rows, thetas):
        z = rows[:, :-1] @ thetas.T
        y = rows[:, -1:]
        out = beta * (y * log_sigmoid(z) + (1 - y) * log_sigmoid(-z))
        if n_prior:
            out = out - (thetas**2).sum(axis=1)[None, :] / (2.0 * n_prior)
        return out

    return Evaluator(pointwise, batch, "logistic_score")


def regression_evaluator(kind: str) -> Evaluator:
    if kind not in REGRESSION_KINDS:
        raise DomainError(f"unknown regression loss {kind!r}")

    def pointwise(row, theta):
        return regression_losses(kind, row[1], row[0], theta[0], theta[1], np.sqrt(theta[2]))

    def batch(rows, thetas):
        x, y = rows[:, :1], rows[:, 1:2]
        r = y - thetas[None, :, 0] - x * thetas[None, :, 1]
        if kind == "l2":
            return r**2
        return np.abs(r) / np.sqrt(thetas[None, :, 2])

    return Evaluator(pointwise, batch, kind)


def gaussian_loglik_evaluator() -> Evaluator:
    """``log N(y | b0 + b1 x, sigma2)`` for regression rows ``(x, y)``."""

    def pointwise(row, theta):
        r = row[1] - theta[0] - row[0] * theta[1]
        return float(-0.5 * np.log(2.0 * np.pi * theta[2]) - r * r / (2.0 * theta[2]))

    def batch(rows, thetas):
        x, y = rows[:, :1], rows[:, 1:2]
        s2 = thetas[None, :, 2]
        r = y - thetas[None, :, 0] - x * thetas[None, :, 1]
        return -0.5 * np.log(2.0 * np.pi * s2) - r * r / (2.0 * s2)

    return Evaluator(pointwise, batch, "gaussian_loglik")
