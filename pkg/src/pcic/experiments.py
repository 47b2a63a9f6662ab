"""Replication drivers for the location, private-logistic and influential-point studies.

Each driver returns ``(rows, summary)``: one dict per replication (and loss)
plus a summary with means and Monte Carlo standard errors over replications.
Every replication draws from streams derived from ``(config.seed, keys...)``,
so results do not depend on worker count or execution order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Iterable

import numpy as np

from .config import ExperimentConfig
from .core import Dataset, PCICError, build_eval_matrix, derive_seed, posterior_mean, seed_sequence
from .estimators import iscv_gibbs, loocv_loss_matrix, pcic_plugin, test_errors
from .losses import (
    classification_evaluator,
    gaussian_loglik_evaluator,
    location_score_evaluator,
    logistic_score_evaluator,
    quadratic_evaluator,
    regression_evaluator,
)
from .models import (
    LocationModel,
    PeruggiaRegression,
    default_steps,
    generate_data,
    location_exact_draws,
    location_posterior,
    logistic_logdensity,
    logistic_model_from_dataset,
    oracle_bias_term,
    oracle_expected_covariance,
    oracle_generalization_error,
    oracle_gibbs_gap,
    oracle_rem,
    peruggia_gibbs,
    regression_generalization_error,
    rw_metropolis,
)
from .sensitivity import influence_measure

__all__ = [
    "run_location",
    "run_dp_logistic",
    "run_outlier",
    "run_sensitivity",
    "run_experiment",
    "mean_se",
    "REPLICATE_EXPERIMENTS",
]

# stream purposes, kept distinct so that no two random inputs share a stream
DATA, DRAWS, TEST = 0, 1, 2


def mean_se(values) -> tuple[float, float]:
    """Mean and its standard error across replications."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise PCICError("at least two replications are needed for a Monte Carlo standard error")
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


def _pmap(fn: Callable, items: Iterable, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


def _summarize(rows: list[dict], columns: Iterable[str]) -> dict:
    out = {}
    for c in columns:
        vals = [r[c] for r in rows if r.get(c) is not None]
        if len(vals) >= 2:
            m, se = mean_se(vals)
            out[c] = {"mean": m, "se": se}
    return out


def _paired(rows: list[dict], a: str, b: str) -> dict:
    m, se = mean_se([r[a] - r[b] for r in rows])
    return {"mean": m, "se": se}


# location-shift model -------------------------------------------------------


def _location_model(cfg: ExperimentConfig) -> LocationModel:
    A = None if cfg.a_matrix is None else np.asarray(cfg.a_matrix, dtype=float)
    return LocationModel(np.asarray(cfg.theta(cfg.d), dtype=float), cfg.beta, cfg.tau, A)


def _location_rep(cfg: ExperimentConfig, r: int) -> dict:
    model = _location_model(cfg)
    params = {"theta_star": model.theta_star.tolist(), "errors": cfg.errors}
    train = generate_data("location", params, cfg.n, derive_seed(cfg.seed, r, DATA))
    test = generate_data("location", params, cfg.n_test, derive_seed(cfg.seed, r, TEST))
    post = location_posterior(train.rows, model.beta, model.tau)
    draw_seed = derive_seed(cfg.seed, r, DRAWS)
    draws = location_exact_draws(post, cfg.M, draw_seed)

    loss = quadratic_evaluator(model.A)
    if cfg.modified_score:
        score = location_score_evaluator(model.beta, tau=model.tau, n=cfg.n)
    else:
        score = location_score_evaluator(model.beta)
    em = build_eval_matrix(train, draws, loss, score)
    centre = posterior_mean(draws)[None, :]
    plugin_train = float(loss.batch(train.rows, centre).mean())
    report = pcic_plugin(em, plugin_train)

    test_em = build_eval_matrix(test, draws, loss, score)
    test_gibbs, test_plugin = test_errors(test_em, float(loss.batch(test.rows, centre).mean()))
    return {
        "replication": r,
        "draw_seed": draw_seed,
        "empirical_gibbs": report.empirical_gibbs,
        "empirical_plugin": report.empirical_plugin,
        "correction_v": report.correction_v,
        "pcic_gibbs": report.pcic_gibbs,
        "pcic_plugin": report.pcic_plugin,
        "iscv": iscv_gibbs(em),
        "test_gibbs": test_gibbs,
        "test_plugin": test_plugin,
        "oracle_covariance": oracle_expected_covariance(train.rows, model),
        "oracle_test_gibbs": oracle_generalization_error(post, model),
        "mc_se": report.mc_se,
    }


def run_location(cfg: ExperimentConfig):
    rows = _pmap(partial(_location_rep, cfg), range(cfg.replications), cfg.threads)
    model = _location_model(cfg)
    summary = _summarize(
        rows,
        ["empirical_gibbs", "empirical_plugin", "correction_v", "pcic_gibbs", "pcic_plugin",
         "iscv", "test_gibbs", "test_plugin", "oracle_covariance", "oracle_test_gibbs"],
    )
    summary["gap"] = _paired(rows, "test_gibbs", "empirical_gibbs")
    summary["pcic_minus_test"] = _paired(rows, "pcic_gibbs", "test_gibbs")
    summary["oracle"] = {
        "gibbs_gap": oracle_gibbs_gap(cfg.n, cfg.beta, cfg.tau, model.A),
        "bias_term": oracle_bias_term(model, cfg.n),
        "rem": oracle_rem(cfg.n, cfg.beta, cfg.tau, model.A),
    }
    return rows, summary


# private logistic regression ------------------------------------------------


def _logistic_sampler(beta: float, cfg: ExperimentConfig):
    steps = default_steps(cfg.M, cfg.burn_in, cfg.thin)

    def sample(data: Dataset, seed: int):
        model = logistic_model_from_dataset(data, beta)
        return rw_metropolis(
            partial(logistic_logdensity, model), np.zeros(model.p), steps,
            burn_in=cfg.burn_in, thin=cfg.thin, seed=seed,
        )

    return sample


def _dp_rep(cfg: ExperimentConfig, split: int) -> list[dict]:
    params = {} if cfg.theta_star is None else {"theta_star": cfg.theta_star}
    full = generate_data("logistic", params, cfg.n + cfg.n_test, derive_seed(cfg.seed, split, DATA))
    train, test = full.subset(slice(0, cfg.n)), full.subset(slice(cfg.n, None))
    out = []
    for b, beta in enumerate(cfg.beta_grid or [cfg.beta]):
        sampler = _logistic_sampler(beta, cfg)
        draw_seed = derive_seed(cfg.seed, split, DRAWS, b)
        draws = sampler(train, draw_seed)
        score = logistic_score_evaluator(beta)
        centre = posterior_mean(draws)[None, :]
        for loss_name in cfg.losses or [cfg.loss]:
            loss = classification_evaluator(loss_name)
            em = build_eval_matrix(train, draws, loss, score)
            report = pcic_plugin(em, float(loss.batch(train.rows, centre).mean()))
            test_em = build_eval_matrix(test, draws, loss, score)
            test_gibbs, test_plugin = test_errors(test_em, float(loss.batch(test.rows, centre).mean()))
            row = {
                "split": split,
                "beta": beta,
                "loss": loss_name,
                "draw_seed": draw_seed,
                "empirical_gibbs": report.empirical_gibbs,
                "correction_v": report.correction_v,
                "pcic_gibbs": report.pcic_gibbs,
                "iscv": iscv_gibbs(em),
                "exact_loocv": None,
                "test_gibbs": test_gibbs,
                "empirical_plugin": report.empirical_plugin,
                "pcic_plugin": report.pcic_plugin,
                "test_plugin": test_plugin,
                "acceptance_rate": draws.info["acceptance_rate"],
            }
            if cfg.exact_loocv:
                row["exact_loocv"] = float(loocv_loss_matrix(train, sampler, loss, draw_seed).mean())
            out.append(row)
    return out


def _bias_summary(rows: list[dict], estimators: Iterable[str], target: str = "test_gibbs") -> dict:
    out = _summarize(rows, [*estimators, target])
    t = np.mean([r[target] for r in rows])
    for est in estimators:
        vals = [r[est] for r in rows if r.get(est) is not None]
        if vals:
            out[est]["bias"] = float(np.mean(vals) - t)
    return out


def run_dp_logistic(cfg: ExperimentConfig):
    nested = _pmap(partial(_dp_rep, cfg), range(cfg.replications), cfg.threads)
    rows = [row for chunk in nested for row in chunk]
    summary = {}
    for beta in cfg.beta_grid or [cfg.beta]:
        for loss_name in cfg.losses or [cfg.loss]:
            sel = [r for r in rows if r["beta"] == beta and r["loss"] == loss_name]
            summary[f"beta={beta}/{loss_name}"] = _bias_summary(
                sel, ["empirical_gibbs", "pcic_gibbs", "iscv", "exact_loocv"]
            )
    return rows, summary


# regression with an influential observation ---------------------------------


def _outlier_rep(cfg: ExperimentConfig, key: tuple[int, float, int]) -> list[dict]:
    r_index, R, rep = key
    params = {"R": R, "beta0": 0.0, "beta1": 1.0, "sigma": 1.0}
    # the same noise stream across R values, so the R grid is compared on common data
    train = generate_data("outlier_regression", params, cfg.n, derive_seed(cfg.seed, rep, DATA))
    draw_seed = derive_seed(cfg.seed, rep, DRAWS, r_index)
    draws = peruggia_gibbs(PeruggiaRegression.from_dataset(train, R), cfg.M, cfg.burn_in, cfg.thin, draw_seed)

    rng = seed_sequence(cfg.seed, rep, TEST, r_index)
    x = train.column("x")
    tx = x[rng.integers(0, cfg.n, size=cfg.n_test)]
    ty = params["beta0"] + params["beta1"] * tx + params["sigma"] * rng.standard_normal(cfg.n_test)
    test = Dataset(np.column_stack([tx, ty]), ("x", "y"), "y")

    score = gaussian_loglik_evaluator()
    out = []
    for loss_name in cfg.losses or ["l2", "scaled_l1"]:
        loss = regression_evaluator(loss_name)
        em = build_eval_matrix(train, draws, loss, score)
        report = pcic_plugin(em, float(loss.batch(train.rows, posterior_mean(draws)[None, :]).mean()))
        test_gibbs, _ = test_errors(build_eval_matrix(test, draws, loss, score))
        normalized = influence_measure(em, normalize=True)
        out.append({
            "R": R,
            "replication": rep,
            "loss": loss_name,
            "draw_seed": draw_seed,
            "empirical_gibbs": report.empirical_gibbs,
            "correction_v": report.correction_v,
            "pcic_gibbs": report.pcic_gibbs,
            "iscv": iscv_gibbs(em),
            "test_gibbs": test_gibbs,
            "generalization_gibbs": regression_generalization_error(
                loss_name, x, params["beta0"], params["beta1"], params["sigma"], draws
            ),
            "influence_argmax": int(np.argmax(normalized)) + 1,
            "influence_at_n": float(normalized[-1]),
            "influence": normalized.tolist(),
        })
    return out


def run_outlier(cfg: ExperimentConfig):
    grid = cfg.r_grid or [cfg.R]
    keys = [(j, float(R), rep) for j, R in enumerate(grid) for rep in range(cfg.replications)]
    nested = _pmap(partial(_outlier_rep, cfg), keys, cfg.threads)
    rows = [row for chunk in nested for row in chunk]
    summary = {}
    for R in grid:
        for loss_name in cfg.losses or ["l2", "scaled_l1"]:
            sel = [r for r in rows if r["R"] == float(R) and r["loss"] == loss_name]
            # bias against the exact generalization error; the sampled test error is reported alongside
            block = _bias_summary(sel, ["empirical_gibbs", "pcic_gibbs", "iscv", "test_gibbs"], "generalization_gibbs")
            block["argmax_at_n_fraction"] = float(np.mean([r["influence_argmax"] == cfg.n for r in sel]))
            summary[f"R={float(R)}/{loss_name}"] = block
    for r in rows:
        del r["influence"]
    return rows, summary


def run_sensitivity(cfg: ExperimentConfig):
    keys = [(0, float(cfg.R), rep) for rep in range(cfg.replications)]
    nested = _pmap(partial(_outlier_rep, cfg), keys, cfg.threads)
    rows, summary = [], {}
    for loss_name in cfg.losses or ["l2", "scaled_l1"]:
        sel = [r for chunk in nested for r in chunk if r["loss"] == loss_name]
        profile = np.mean([r["influence"] for r in sel], axis=0)
        summary[loss_name] = {
            "argmax_at_n_fraction": float(np.mean([r["influence_argmax"] == cfg.n for r in sel])),
            "mean_normalized_influence": profile.tolist(),
        }
        for r in sel:
            for i, value in enumerate(r["influence"], start=1):
                rows.append({
                    "replication": r["replication"], "loss": loss_name, "R": r["R"],
                    "observation": i, "normalized_influence": value,
                })
    return rows, summary


REPLICATE_EXPERIMENTS: dict[str, Callable] = {
    "location": run_location,
    "dp_logistic": run_dp_logistic,
    "outlier": run_outlier,
    "sensitivity": run_sensitivity,
}


def run_experiment(cfg: ExperimentConfig):
    if cfg.replications < 2:
        raise PCICError("replications must be at least 2 for Monte Carlo standard errors")
    try:
        runner = REPLICATE_EXPERIMENTS[cfg.experiment]
    except KeyError:
        raise PCICError(f"{cfg.experiment!r} is not a replication experiment") from None
    return runner(cfg)

