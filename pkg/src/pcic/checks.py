"""Self-check suite: analytic oracles of the location model, derivative identities, WAIC.

Each check returns a :class:`CheckResult`; :func:`run_checks` runs them all.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .core import EvalMatrix, batch_standard_error, build_eval_matrix, derive_seed, seed_sequence
from .estimators import covariance_correction, pcic_gibbs, waic2
from .losses import location_score_evaluator, quadratic_evaluator
from .models import (
    LocationModel,
    generate_data,
    kumar_expectation,
    location_exact_draws,
    location_posterior,
    oracle_bias_term,
    oracle_expected_covariance,
    oracle_gibbs_gap,
    oracle_rem,
    shrinkage_factor,
)
from .sensitivity import finite_difference_check

__all__ = ["CheckResult", "run_checks", "CHECKS", "FAULTS"]

FAULTS = ("a_factor",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    expected: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: observed={self.observed:.6g} expected={self.expected:.6g} "
            f"tolerance={self.tolerance:.3g}{' (' + self.detail + ')' if self.detail else ''}"
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _spd(rng, d: int) -> np.ndarray:
    G = rng.standard_normal((d, d))
    return G @ G.T + d * np.eye(d)


def check_kumar(seed: int, quick: bool, fault=None) -> CheckResult:
    rng = seed_sequence(seed, 1)
    n_mc = 100_000 if quick else 1_000_000
    tol = 0.03 if quick else 0.01
    pairs = [(np.eye(2), np.eye(2))] + [(_spd(rng, 3), _spd(rng, 3)) for _ in range(5)]
    worst, worst_expected, worst_rel = 0.0, 0.0, -1.0
    for B, C in pairs:
        w = rng.standard_normal((n_mc, B.shape[0]))
        mc = float(np.mean(np.einsum("ij,jk,ik->i", w, B, w) * np.einsum("ij,jk,ik->i", w, C, w)))
        exact = kumar_expectation(B, C)
        rel = abs(mc - exact) / abs(exact)
        if rel > worst_rel:
            worst, worst_expected, worst_rel = mc, exact, rel
    return CheckResult("kumar_identity", worst_rel < tol, worst, worst_expected, tol, f"worst relative error {worst_rel:.2e}")


def check_waic2(seed: int, quick: bool, fault=None) -> CheckResult:
    rng = seed_sequence(seed, 2)
    worst = 0.0
    for _ in range(100):
        n, M = int(rng.integers(1, 21)), int(rng.integers(2, 201))
        L = rng.normal(-1.0, 1.0, size=(n, M))
        for beta in (0.5, 1.0, 2.0):
            a = pcic_gibbs(EvalMatrix(-L, beta * L)).pcic_gibbs
            b = waic2(L, beta)
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return CheckResult("waic2_identity", worst <= 1e-12, worst, 0.0, 1e-12, "max relative difference")


def check_covariance_closure(seed: int, quick: bool, fault=None) -> CheckResult:
    """Monte Carlo posterior covariance against its closed form, in batch standard errors."""
    M = 20_000 if quick else 100_000
    n_datasets = 3 if quick else 10
    k_se = 4.0 if quick else 3.0
    worst_z, worst_obs, worst_exp = 0.0, 0.0, 0.0
    for d in (1, 3):
        for n in (20, 100):
            model = LocationModel(np.full(d, 1.0), beta=1.0, tau=10.0)
            for j in range(n_datasets):
                data = generate_data("location", {"theta_star": model.theta_star}, n, derive_seed(seed, 3, d, n, j))
                post = location_posterior(data.rows, model.beta, model.tau)
                draws = location_exact_draws(post, M, derive_seed(seed, 4, d, n, j))
                em = build_eval_matrix(data, draws, quadratic_evaluator(model.A), location_score_evaluator(model.beta))
                v, _ = covariance_correction(em)
                se = batch_standard_error(em, lambda e: covariance_correction(e)[0], 100)
                exact = oracle_expected_covariance(data.rows, model)
                z = abs(v - exact) / se
                if z > worst_z:
                    worst_z, worst_obs, worst_exp = z, v, exact
    return CheckResult(
        "covariance_closure", worst_z <= k_se, worst_obs, worst_exp, k_se, f"worst |z| = {worst_z:.2f} batch SE"
    )


def _location_replicates(model: LocationModel, n: int, reps: int, rng, prior_score=False):
    """Exact-posterior replicate quantities for the location model.

    Returns per-replicate empirical Gibbs error, Gibbs generalization error and
    mean posterior covariance. Posterior and test-point expectations are taken
    in closed form, so the only noise left is the training sample.
    """
    d = model.d
    A, tr = model.A, float(np.trace(model.A))
    X = model.theta_star + rng.standard_normal((reps, n, d))
    a = shrinkage_factor(n, model.beta, model.tau)
    S = 1.0 / (n * model.beta + 1.0 / model.tau)
    theta_hat = a * X.mean(axis=1)
    Xt = X - theta_hat[:, None, :]
    quad = np.einsum("rij,jk,rik->ri", Xt, A, Xt)
    emp = quad.mean(axis=1) + S * tr
    err = model.theta_star - theta_hat
    test = tr + np.einsum("rj,jk,rk->r", err, A, err) + S * tr
    cov = (-0.5 * model.beta * (4.0 * S * quad + 2.0 * S**2 * tr)).mean(axis=1)
    if prior_score:
        prior_cov = (-4.0 * S * np.einsum("rij,jk,rk->ri", Xt, A, theta_hat) + 2.0 * S**2 * tr).mean(axis=1)
        cov = cov - prior_cov / (2.0 * n * model.tau)
    return emp, test, cov


def _mean_se(v):
    return float(np.mean(v)), float(np.std(v, ddof=1) / np.sqrt(len(v)))


def check_gap_closure(seed: int, quick: bool, fault=None) -> CheckResult:
    n, reps = 100, (5_000 if quick else 20_000)
    model = LocationModel(np.array([1.0]), beta=1.0, tau=10.0)
    emp, test, _ = _location_replicates(model, n, reps, seed_sequence(seed, 5))
    gap, se = _mean_se(test - emp)
    expected = oracle_gibbs_gap(n, model.beta, model.tau, model.A)
    if fault == "a_factor":
        expected *= 1.5
    return CheckResult("gap_closure", abs(gap - expected) <= 3 * se, gap, expected, 3 * se, "3 MC SE")


def check_difference_closure(seed: int, quick: bool, fault=None) -> CheckResult:
    """Gap + mean covariance + bias + rem vanishes in expectation (strong prior, theta* = 5)."""
    n, reps = 100, (5_000 if quick else 20_000)
    model = LocationModel(np.array([5.0]), beta=1.0, tau=1.0 / n)
    emp, test, cov = _location_replicates(model, n, reps, seed_sequence(seed, 6))
    resid, se = _mean_se(test - emp + cov)
    expected = -(oracle_bias_term(model, n) + oracle_rem(n, model.beta, model.tau, model.A))
    return CheckResult("difference_closure", abs(resid - expected) <= 3 * se, resid, expected, 3 * se, "3 MC SE")


def check_modification_closure(seed: int, quick: bool, fault=None) -> CheckResult:
    """With the prior-augmented score the residual bias no longer depends on theta*."""
    n, reps = 100, (5_000 if quick else 20_000)
    resid = []
    for theta in (0.0, 5.0):
        model = LocationModel(np.array([theta]), beta=1.0, tau=1.0 / n)
        # identical noise for both theta* values
        emp, test, cov = _location_replicates(model, n, reps, seed_sequence(seed, 7), prior_score=True)
        resid.append(test - emp + cov)
    diff, se = _mean_se(resid[1] - resid[0])
    return CheckResult("modification_closure", abs(diff) <= 3 * se, diff, 0.0, 3 * se, "theta*=5 minus theta*=0, 3 MC SE")


def check_rem_order(seed: int, quick: bool, fault=None) -> CheckResult:
    ns = np.unique(np.logspace(1, 4, 30).astype(int))
    scaled = np.array([abs(oracle_rem(int(n), 1.0, 10.0, np.eye(2))) * n**2 for n in ns])
    bound = 10.0
    return CheckResult("rem_order", bool(scaled.max() <= bound), float(scaled.max()), bound, 0.0, "max |rem| n^2 over n in [10, 1e4]")


def check_weight_derivatives(seed: int, quick: bool, fault=None) -> CheckResult:
    n, M = 20, (20_000 if quick else 100_000)
    model = LocationModel(np.array([1.0]), beta=1.0, tau=10.0)
    data = generate_data("location", {"theta_star": [1.0]}, n, derive_seed(seed, 8))
    post = location_posterior(data.rows, model.beta, model.tau)
    draws = location_exact_draws(post, M, derive_seed(seed, 9))
    em = build_eval_matrix(data, draws, quadratic_evaluator(model.A), location_score_evaluator(model.beta))
    worst1 = max(finite_difference_check(em, i, 1, 1e-3).rel_error for i in range(n))
    worst2 = max(finite_difference_check(em, i, 2, 1e-3).rel_error for i in range(n))
    ok = worst1 < 0.01 and worst2 < 0.05
    return CheckResult("weight_derivative_fd", ok, max(worst1, worst2), 0.0, 0.01,
                       f"k=1 worst {worst1:.2e} (<1e-2), k=2 worst {worst2:.2e} (<5e-2)")


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "kumar_identity": check_kumar,
    "waic2_identity": check_waic2,
    "covariance_closure": check_covariance_closure,
    "gap_closure": check_gap_closure,
    "difference_closure": check_difference_closure,
    "modification_closure": check_modification_closure,
    "rem_order": check_rem_order,
    "weight_derivative_fd": check_weight_derivatives,
}


def run_checks(seed: int = 20220624, quick: bool = False, fault: Optional[str] = None,
               only: Optional[list[str]] = None) -> list[CheckResult]:
    """Run the suite. ``fault`` deliberately corrupts one oracle to prove a check can fail."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; expected one of {FAULTS}")
    names = only or list(CHECKS)
    return [CHECKS[name](seed, quick, fault) for name in names]
