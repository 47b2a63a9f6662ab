"""Risk estimators computed from an :class:`EvalMatrix`.

All posterior moments use the divide-by-M form, so every estimator here is an
exact function of the draws handed in.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .core import (
    Dataset,
    DegenerateWeightsError,
    DimensionError,
    DomainError,
    EvalMatrix,
    ObservationWeights,
    PCICError,
    PosteriorDraws,
    RiskReport,
    SamplerError,
    batch_standard_error,
)

__all__ = [
    "empirical_gibbs",
    "covariance_correction",
    "pcic_gibbs",
    "pcic_plugin",
    "pcic_weighted",
    "waic2",
    "iscv_gibbs",
    "loocv_loss_matrix",
    "exact_loocv",
    "test_errors",
    "kappa3_diagnostic",
]

MC_BATCHES = 10


def empirical_gibbs(em: EvalMatrix) -> float:
    return float(em.nu.mean())


def _row_covariance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a * b).mean(axis=1) - a.mean(axis=1) * b.mean(axis=1)


def covariance_correction(em: EvalMatrix) -> tuple[float, np.ndarray]:
    """Per-observation posterior covariance of loss and score, and its mean.

    Uses the centred product rather than ``E[nu s] - E[nu]E[s]`` to avoid
    cancellation when scores carry a large offset; the two agree exactly in
    exact arithmetic.
    """
    nu_c = em.nu - em.nu.mean(axis=1, keepdims=True)
    s_c = em.s - em.s.mean(axis=1, keepdims=True)
    influence = (nu_c * s_c).mean(axis=1)
    return float(influence.mean()), influence


def kappa3_diagnostic(em: EvalMatrix) -> np.ndarray:
    """Mixed third central moment ``E[(nu - E nu)(s - E s)^2]`` per observation."""
    if em.M < 3:
        raise DimensionError("kappa3 needs at least three draws")
    nu_c = em.nu - em.nu.mean(axis=1, keepdims=True)
    s_c = em.s - em.s.mean(axis=1, keepdims=True)
    return (nu_c * s_c**2).mean(axis=1)


def _pcic_value(em: EvalMatrix) -> float:
    return empirical_gibbs(em) - covariance_correction(em)[0]


def pcic_gibbs(em: EvalMatrix) -> RiskReport:
    """Gibbs posterior covariance criterion: empirical Gibbs error minus the mean covariance."""
    emp = empirical_gibbs(em)
    v, influence = covariance_correction(em)
    kappa3 = kappa3_diagnostic(em) if em.M >= 3 else np.zeros(em.n)
    return RiskReport(
        empirical_gibbs=emp,
        correction_v=v,
        pcic_gibbs=emp - v,
        influence=influence,
        kappa3=kappa3,
        mc_se=batch_standard_error(em, _pcic_value, MC_BATCHES),
    )


def pcic_plugin(em: EvalMatrix, plugin_empirical: float) -> RiskReport:
    """Add the plugin criterion to the Gibbs report.

    ``plugin_empirical`` must be the mean loss at the posterior mean of the same
    draws that produced ``em``.
    """
    report = pcic_gibbs(em)
    plugin_empirical = float(plugin_empirical)
    return RiskReport(
        empirical_gibbs=report.empirical_gibbs,
        correction_v=report.correction_v,
        pcic_gibbs=report.pcic_gibbs,
        influence=report.influence,
        kappa3=report.kappa3,
        mc_se=report.mc_se,
        empirical_plugin=plugin_empirical,
        pcic_plugin=plugin_empirical - report.correction_v,
    )


def pcic_weighted(em: EvalMatrix, weights) -> float:
    if not isinstance(weights, ObservationWeights):
        weights = ObservationWeights(weights)
    if len(weights) != em.n:
        raise DimensionError(f"{len(weights)} weights for {em.n} observations")
    w = weights.w
    _, influence = covariance_correction(em)
    return float((w * em.nu.mean(axis=1)).sum() / em.n - (w * influence).sum() / em.n)


def waic2(loglik, beta: float) -> float:
    """Variance-form WAIC for log-likelihood values ``loglik[i, k]`` at learning rate ``beta``."""
    loglik = np.asarray(loglik, dtype=float)
    if beta <= 0:
        raise DomainError("beta must be positive")
    if loglik.ndim != 2:
        raise DimensionError("loglik must be an n x M matrix")
    n = loglik.shape[0]
    return float(-loglik.mean(axis=1).sum() / n + beta * loglik.var(axis=1).sum() / n)


def iscv_gibbs(em: EvalMatrix) -> float:
    """Importance-sampling leave-one-out estimate with weights ``exp(-s[i, k])``.

    Log-weights are shifted per row so the largest weight is exactly 1; the
    self-normalized ratio does not depend on the shift. Rows whose weight sum is
    not a positive finite number raise :class:`DegenerateWeightsError`.
    """
    with np.errstate(over="ignore"):
        # an infinite gap only underflows its weight to 0
        u = np.exp(-(em.s - em.s.min(axis=1, keepdims=True)))
    total = u.sum(axis=1)
    bad = np.flatnonzero(~(total > 0) | ~np.isfinite(total))
    if bad.size:
        raise DegenerateWeightsError(f"importance weights degenerate for observation {bad[0]}")
    return float(((em.nu * u).sum(axis=1) / total).mean())


SamplerFactory = Callable[[Dataset, int], PosteriorDraws]


def loocv_loss_matrix(dataset: Dataset, sampler_factory: SamplerFactory, loss_fn, seed: int) -> np.ndarray:
    """Losses ``nu(X_i, theta_k^(-i))`` with draws refit on the data minus row i.

    Fold i is sampled with seed ``seed + i``. Row i of the result holds the M
    fold losses for observation i.
    """
    if dataset.n < 2:
        raise DimensionError("leave-one-out needs at least two observations")
    rows = []
    for i in range(dataset.n):
        try:
            draws = sampler_factory(dataset.drop(i), seed + i)
        except PCICError as exc:
            raise SamplerError(f"sampler failed on fold {i}: {exc}") from exc
        thetas = draws.draws
        row = dataset.rows[i : i + 1]
        batch = getattr(loss_fn, "batch", None)
        if batch is not None:
            vals = np.asarray(batch(row, thetas), dtype=float)[0]
        else:
            vals = np.array([loss_fn(row[0], t) for t in thetas], dtype=float)
        if not np.all(np.isfinite(vals)):
            raise SamplerError(f"non-finite loss on fold {i}")
        rows.append(vals)
    if len({r.shape[0] for r in rows}) != 1:
        raise DimensionError("folds returned different numbers of draws")
    return np.vstack(rows)


def exact_loocv(dataset: Dataset, sampler_factory: SamplerFactory, loss_fn, seed: int) -> float:
    """Brute-force leave-one-out Gibbs error: refit once per observation."""
    return float(loocv_loss_matrix(dataset, sampler_factory, loss_fn, seed).mean())


def test_errors(test_em: EvalMatrix, plugin_test_empirical: Optional[float] = None):
    """Gibbs (and passthrough plugin) error on held-out rows.

    ``test_em`` must be built with the same draws as the training matrix.
    """
    plugin = None if plugin_test_empirical is None else float(plugin_test_empirical)
    return empirical_gibbs(test_em), plugin


test_errors.__test__ = False  # keep pytest from collecting it
