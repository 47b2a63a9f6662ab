"""Local case sensitivity: reweighted posteriors, derivative checks, influence."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import DegenerateWeightsError, DimensionError, DomainError, EvalMatrix
from .estimators import covariance_correction, kappa3_diagnostic

__all__ = [
    "WeightedExpectation",
    "SensitivityCheck",
    "weighted_expectation",
    "local_sensitivity",
    "finite_difference_check",
    "influence_measure",
    "curvature_i2",
]

ESS_DEGENERATE = 10.0
ESS_VALID = 100.0
REL_FLOOR = 1e-12


class WeightedExpectation(NamedTuple):
    value: float
    ess: float
    degenerate: bool


@dataclass(frozen=True)
class SensitivityCheck:
    observation_index: int
    order: int
    analytic: float
    numeric: float
    step: float
    rel_error: float
    ess: float
    warning: Optional[str] = None


def _check_index(em: EvalMatrix, i: int) -> None:
    if not 0 <= i < em.n:
        raise DimensionError(f"observation index {i} outside 0..{em.n - 1}")


def weighted_expectation(em: EvalMatrix, i: int, w_i: float, values) -> WeightedExpectation:
    """Expectation of ``values`` under the posterior with observation i down-weighted to ``w_i``.

    Estimated by self-normalized reweighting of the full-posterior draws with
    factors ``exp((w_i - 1) s[i, k])``.
    """
    _check_index(em, i)
    values = np.asarray(values, dtype=float)
    if values.shape != (em.M,):
        raise DimensionError(f"values must have length {em.M}")
    if not 0.0 <= w_i <= 1.0:
        raise DomainError(f"w_i must lie in [0, 1], got {w_i}")
    if w_i == 1.0:
        return WeightedExpectation(float(values.mean()), float(em.M), False)
    s = em.s[i]
    # (w_i - 1) <= 0, so shifting by the row minimum caps the largest factor at 1
    u = np.exp((w_i - 1.0) * (s - s.min()))
    total = u.sum()
    ess = float(total**2 / (u**2).sum())
    return WeightedExpectation(float((values * u).sum() / total), ess, ess < ESS_DEGENERATE)


def local_sensitivity(em: EvalMatrix, i: int, k: int) -> float:
    """k-th derivative of the reweighted posterior mean of ``nu[i]`` in ``w_i`` at ``w_i = 1``."""
    _check_index(em, i)
    if k == 1:
        return float(covariance_correction(em)[1][i])
    if k == 2:
        return float(kappa3_diagnostic(em)[i])
    raise DomainError(f"order k must be 1 or 2, got {k}")


def finite_difference_check(em: EvalMatrix, i: int, k: int, h: float = 1e-3) -> SensitivityCheck:
    """Compare the closed-form derivative against a one-sided finite difference.

    Nodes are ``1, 1-h, 1-2h`` since weights cannot exceed one. Order 1 uses the
    second-order backward stencil ``(3g0 - 4g1 + g2) / 2h``; order 2 uses
    ``(g0 - 2g1 + g2) / h^2``.
    """
    if not 0.0 < h < 0.5:
        raise DomainError("step h must lie in (0, 0.5)")
    analytic = local_sensitivity(em, i, k)
    nu = em.nu[i]
    g0 = weighted_expectation(em, i, 1.0, nu)
    g1 = weighted_expectation(em, i, 1.0 - h, nu)
    g2 = weighted_expectation(em, i, 1.0 - 2.0 * h, nu)
    ess = min(g1.ess, g2.ess)
    if g1.degenerate or g2.degenerate:
        raise DegenerateWeightsError(f"reweighting degenerate for observation {i} (ESS {ess:.1f})")
    if k == 1:
        numeric = (3.0 * g0.value - 4.0 * g1.value + g2.value) / (2.0 * h)
    else:
        numeric = (g0.value - 2.0 * g1.value + g2.value) / h**2
    rel = abs(analytic - numeric) / max(abs(analytic), REL_FLOOR)
    warning = None
    if ess < ESS_VALID:
        warning = f"effective sample size {ess:.1f} below {ESS_VALID:.0f}"
    return SensitivityCheck(i, k, analytic, float(numeric), h, float(rel), ess, warning)


def influence_measure(em: EvalMatrix, normalize: bool = False) -> np.ndarray:
    """Per-observation covariance of loss and score.

    With ``normalize=True`` the vector is divided by its sum; if the sum is zero
    a warning is issued and the raw vector is returned.
    """
    _, influence = covariance_correction(em)
    if not normalize:
        return influence
    total = influence.sum()
    if total == 0.0:
        warnings.warn("influence sum is zero; returning unnormalized values", RuntimeWarning, stacklevel=2)
        return influence
    return influence / total


def curvature_i2(loglik) -> np.ndarray:
    """Posterior variance of each observation's log-likelihood (divide-by-M)."""
    loglik = np.asarray(loglik, dtype=float)
    if loglik.ndim != 2 or loglik.shape[1] < 2:
        raise DimensionError("loglik must be n x M with M >= 2")
    return loglik.var(axis=1)
