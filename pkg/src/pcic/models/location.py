"""Conjugate Gaussian location-shift model and its closed-form risk quantities.

Data ``X_i = theta_star + eps_i`` with unit-covariance errors, quasi-posterior
``exp{-beta sum |X_i - theta|^2 / 2 - |theta|^2 / (2 tau)}``, loss
``(x - theta)' A (x - theta)`` and score ``-(beta/2)|x - theta|^2``.
Throughout, ``a = n beta tau / (n beta tau + 1)`` and the posterior covariance
is ``S I`` with ``S = 1 / (n beta + 1/tau)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DimensionError, DomainError, PosteriorDraws, seed_sequence

__all__ = [
    "LocationModel",
    "LocationPosterior",
    "location_posterior",
    "location_exact_draws",
    "shrinkage_factor",
    "oracle_gibbs_gap",
    "oracle_posterior_covariances",
    "oracle_expected_covariance",
    "oracle_prior_covariances",
    "oracle_rem",
    "oracle_bias_term",
    "oracle_generalization_error",
    "kumar_expectation",
]


def _check_spd(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"A must be square, got {A.shape}")
    if np.max(np.abs(A - A.T)) >= 1e-12:
        raise DomainError("A must be symmetric")
    if np.min(np.linalg.eigvalsh(A)) <= 0:
        raise DomainError("A must be positive definite")
    return A


@dataclass(frozen=True)
class LocationModel:
    theta_star: np.ndarray
    beta: float = 1.0
    tau: float = 10.0
    A: np.ndarray = None

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta_star, dtype=float))
        A = np.eye(theta.size) if self.A is None else _check_spd(self.A)
        if A.shape[0] != theta.size:
            raise DimensionError(f"A is {A.shape} but theta_star has {theta.size} entries")
        if self.beta <= 0 or self.tau <= 0:
            raise DomainError("beta and tau must be positive")
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "A", A)

    @property
    def d(self) -> int:
        return self.theta_star.size


@dataclass(frozen=True)
class LocationPosterior:
    theta_hat: np.ndarray
    s_scale: float
    a_factor: float


def shrinkage_factor(n: int, beta: float, tau: float) -> float:
    return n * beta * tau / (n * beta * tau + 1.0)


def location_posterior(data, beta: float, tau: float) -> LocationPosterior:
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < 1:
        raise DimensionError("location posterior needs at least one observation")
    a = shrinkage_factor(n, beta, tau)
    return LocationPosterior(theta_hat=a * X.mean(axis=0), s_scale=1.0 / (n * beta + 1.0 / tau), a_factor=a)


def location_exact_draws(post: LocationPosterior, M: int, seed: int) -> PosteriorDraws:
    if M < 2:
        raise DimensionError("need at least two draws")
    rng = seed_sequence(seed)
    d = post.theta_hat.size
    draws = post.theta_hat + np.sqrt(post.s_scale) * rng.standard_normal((M, d))
    return PosteriorDraws(draws, sampler="location_exact", seed=seed)


def oracle_gibbs_gap(n: int, beta: float, tau: float, A) -> float:
    """Expected generalization minus empirical Gibbs error: ``(2/n) a tr(A)``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return 2.0 / n * shrinkage_factor(n, beta, tau) * float(np.trace(A))


def oracle_posterior_covariances(data, model: LocationModel) -> np.ndarray:
    """Exact ``Cov_pos[nu(X_i), s(X_i)]`` for each observation.

    ``-(beta/2) {4 S Xt_i' A Xt_i + 2 S^2 tr(A)}`` with ``Xt_i = X_i - theta_hat``.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    post = location_posterior(X, model.beta, model.tau)
    Xt = X - post.theta_hat
    quad = np.einsum("ij,jk,ik->i", Xt, model.A, Xt)
    S = post.s_scale
    return -0.5 * model.beta * (4.0 * S * quad + 2.0 * S**2 * np.trace(model.A))


def oracle_expected_covariance(data, model: LocationModel) -> float:
    """Mean over observations of the exact posterior covariance of loss and score."""
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 1:
        raise DimensionError("data must be nonempty")
    return float(oracle_posterior_covariances(X, model).mean())


def oracle_prior_covariances(data, model: LocationModel) -> np.ndarray:
    """Exact ``Cov_pos[nu(X_i), theta'theta]`` per observation.

    Equals ``-4 S Xt_i' A theta_hat + 2 S^2 tr(A)``; the constant does not
    depend on the dimension.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    post = location_posterior(X, model.beta, model.tau)
    Xt = X - post.theta_hat
    S = post.s_scale
    return -4.0 * S * (Xt @ model.A @ post.theta_hat) + 2.0 * S**2 * np.trace(model.A)


def oracle_rem(n: int, beta: float, tau: float, A) -> float:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    tr = float(np.trace(A))
    a = shrinkage_factor(n, beta, tau)
    return beta * tr / (n * beta + 1.0 / tau) ** 2 + (a**3 - 2.0 * a**2) * 2.0 * tr / n**2


def oracle_bias_term(model: LocationModel, n: int) -> float:
    """Prior-induced bias ``(2/n) a (theta*' A theta*) / (n beta tau + 1)^2``.

    In expectation, PCIC_G minus the Gibbs generalization error equals this
    term plus :func:`oracle_rem`.
    """
    a = shrinkage_factor(n, model.beta, model.tau)
    t = model.theta_star
    return 2.0 / n * a * float(t @ model.A @ t) / (n * model.beta * model.tau + 1.0) ** 2


def oracle_generalization_error(post: LocationPosterior, model: LocationModel) -> float:
    """Gibbs generalization error given the posterior, exact over both test point and draws.

    Assumes unit-covariance errors: ``tr(A) + (theta* - theta_hat)' A (theta* - theta_hat) + S tr(A)``.
    """
    r = model.theta_star - post.theta_hat
    tr = float(np.trace(model.A))
    return tr + float(r @ model.A @ r) + post.s_scale * tr


def kumar_expectation(B, C) -> float:
    """``E[(w'Bw)(w'Cw)]`` for ``w ~ N(0, I)``: ``2 tr(BC) + tr(B) tr(C)``."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if B.shape != C.shape or B.shape[0] != B.shape[1]:
        raise DimensionError(f"B {B.shape} and C {C.shape} must be equal square shapes")
    for name, m in (("B", B), ("C", C)):
        if np.max(np.abs(m - m.T), initial=0.0) >= 1e-12:
            raise DomainError(f"{name} must be symmetric")
    return float(2.0 * np.trace(B @ C) + np.trace(B) * np.trace(C))
