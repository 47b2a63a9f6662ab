"""Command-line front end: ``pcic estimate``, ``pcic replicate`` and ``pcic check``.

Exit codes: 0 success, 1 usage or I/O error, 2 check-suite failure, 3 sampler failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import replace
from functools import partial
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .checks import FAULTS, run_checks
from .config import ConfigError, ExperimentConfig
from .core import Dataset, PCICError, PosteriorDraws, SamplerError, build_eval_matrix, posterior_mean
from .estimators import iscv_gibbs, pcic_plugin, pcic_weighted
from .experiments import run_experiment
from .losses import (
    CLASSIFICATION_KINDS,
    REGRESSION_KINDS,
    classification_evaluator,
    gaussian_loglik_evaluator,
    location_score_evaluator,
    logistic_score_evaluator,
    quadratic_evaluator,
    regression_evaluator,
)
from .models import (
    LocationModel,
    RegressionData,
    default_steps,
    location_exact_draws,
    location_posterior,
    logistic_logdensity,
    logistic_model_from_dataset,
    peruggia_gibbs,
    rw_metropolis,
)

__all__ = ["main", "read_csv", "estimate", "EXIT_OK", "EXIT_USAGE", "EXIT_CHECK", "EXIT_SAMPLER"]

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_SAMPLER = 0, 1, 2, 3
MODELS = ("location", "logistic", "regression")
# the second-order remainder is flagged when it exceeds this share of |V|
KAPPA3_RATIO_LIMIT = 0.5


class UsageError(Exception):
    pass


# CSV ingestion --------------------------------------------------------------


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header row plus numeric rows. Errors name the offending line."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise UsageError(f"cannot open data file {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise UsageError(f"{path}: empty file") from None
        if not header or any(h == "" for h in header) or len(set(header)) != len(header):
            raise UsageError(f"{path}:1: header must hold distinct non-empty column names")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != len(header):
                raise UsageError(f"{path}:{line}: expected {len(header)} fields, found {len(row)}")
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise UsageError(f"{path}:{line}: non-numeric field in {row}") from None
            if not all(math.isfinite(v) for v in values):
                raise UsageError(f"{path}:{line}: non-finite value")
            rows.append(values)
    if not rows:
        raise UsageError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def _dataset_for(model: str, header: list[str], values: np.ndarray) -> Dataset:
    if model == "logistic":
        if "label" not in header:
            raise UsageError("classification data needs a 'label' column")
        j = header.index("label")
        labels = values[:, j]
        if not np.all((labels == 0) | (labels == 1)):
            raise UsageError("'label' must be 0 or 1")
        cov_names = [h for h in header if h != "label"]
        cov = np.delete(values, j, axis=1)
        rows = np.column_stack([np.ones(len(values)), cov, labels])
        return Dataset(rows, ("intercept", *cov_names, "label"), "label")
    if model == "regression":
        if "x" not in header or "y" not in header:
            raise UsageError("regression data needs 'x' and 'y' columns")
        rows = values[:, [header.index("x"), header.index("y")]]
        return Dataset(rows, ("x", "y"), "y")
    return Dataset(values, tuple(header))


def _weights(cfg: ExperimentConfig, n: int, base: Path) -> Optional[np.ndarray]:
    if cfg.weights is None:
        return None
    if isinstance(cfg.weights, str):
        p = Path(cfg.weights)
        p = p if p.is_absolute() else base / p
        try:
            w = np.loadtxt(p, dtype=float, ndmin=1)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read weights from {p}: {exc}") from exc
    else:
        w = np.asarray(cfg.weights, dtype=float)
    if w.shape != (n,):
        raise UsageError(f"weights have shape {w.shape}, expected ({n},)")
    return w


# estimate -------------------------------------------------------------------


def _sample(cfg: ExperimentConfig, data: Dataset) -> tuple[PosteriorDraws, object, object]:
    """Draws plus (loss, score) evaluators for the configured model."""
    if cfg.model == "location":
        if cfg.loss != "quadratic":
            raise UsageError(f"loss {cfg.loss!r} does not apply to the location model (use 'quadratic')")
        d = data.rows.shape[1]
        A = np.eye(d) if cfg.a_matrix is None else np.asarray(cfg.a_matrix, dtype=float)
        LocationModel(np.zeros(d), cfg.beta, cfg.tau, A)  # validates A against the data dimension
        post = location_posterior(data.rows, cfg.beta, cfg.tau)
        draws = location_exact_draws(post, cfg.M, cfg.seed)
        if cfg.modified_score:
            score = location_score_evaluator(cfg.beta, tau=cfg.tau, n=data.n)
        else:
            score = location_score_evaluator(cfg.beta)
        return draws, quadratic_evaluator(A), score
    if cfg.model == "logistic":
        if cfg.loss not in CLASSIFICATION_KINDS:
            raise UsageError(f"loss {cfg.loss!r} does not apply to the logistic model {CLASSIFICATION_KINDS}")
        model = logistic_model_from_dataset(data, cfg.beta)
        draws = rw_metropolis(
            partial(logistic_logdensity, model), np.zeros(model.p), default_steps(cfg.M, cfg.burn_in, cfg.thin),
            burn_in=cfg.burn_in, thin=cfg.thin, seed=cfg.seed,
        )
        return draws, classification_evaluator(cfg.loss), logistic_score_evaluator(cfg.beta)
    if cfg.model == "regression":
        if cfg.loss not in REGRESSION_KINDS:
            raise UsageError(f"loss {cfg.loss!r} does not apply to the regression model {REGRESSION_KINDS}")
        reg = RegressionData(data.column("x"), data.column("y"))
        draws = peruggia_gibbs(reg, cfg.M, cfg.burn_in, cfg.thin, cfg.seed)
        return draws, regression_evaluator(cfg.loss), gaussian_loglik_evaluator()
    raise UsageError(f"unknown model {cfg.model!r}; expected one of {MODELS}")


def _kappa3_summary(report) -> dict:
    bound = float(np.abs(report.kappa3).sum() / (2 * report.kappa3.size))
    v = abs(report.correction_v)
    ratio = bound / v if v > 0 else (0.0 if bound == 0 else math.inf)
    return {
        "max_abs": float(np.abs(report.kappa3).max()),
        "remainder_bound": bound,
        "ratio_to_correction": ratio if math.isfinite(ratio) else None,
        "acceptable": bool(ratio <= KAPPA3_RATIO_LIMIT),
        "limit": KAPPA3_RATIO_LIMIT,
    }


def estimate(cfg: ExperimentConfig, data_path, base: Optional[Path] = None) -> dict:
    """Run the full estimation pipeline on a CSV file and return the report payload."""
    data_path = Path(data_path)
    header, values = read_csv(data_path)
    data = _dataset_for(cfg.model, header, values)
    draws, loss, score = _sample(cfg, data)
    em = build_eval_matrix(data, draws, loss, score)
    plugin = float(loss.batch(data.rows, posterior_mean(draws)[None, :]).mean())
    report = pcic_plugin(em, plugin)

    warnings = [str(w) for w in draws.info.get("warnings", [])]
    k3 = _kappa3_summary(report)
    if not k3["acceptable"]:
        warnings.append("third-order term is large relative to the covariance correction")
    try:
        iscv = iscv_gibbs(em)
    except PCICError as exc:
        iscv = None
        warnings.append(f"importance-sampling CV unavailable: {exc}")

    w = _weights(cfg, data.n, base or data_path.parent)
    return {
        "version": __version__,
        "config": cfg.to_dict(),
        "data": {
            "file": data_path.name,
            "sha256": hashlib.sha256(data_path.read_bytes()).hexdigest(),
            "n": data.n,
            "columns": list(data.columns),
        },
        "provenance": draws.provenance(),
        "report": report.to_dict(),
        "iscv": iscv,
        "pcic_weighted": None if w is None else pcic_weighted(em, w),
        "kappa3_diagnostics": k3,
        "warnings": warnings,
    }


# output ---------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(payload) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from exc


def _rows_csv(rows: list[dict]) -> str:
    import io

    names: list[str] = []
    for r in rows:
        names.extend(k for k in r if k not in names)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


# commands -------------------------------------------------------------------


def _load_config(path, experiment: str) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    if data.get("experiment", experiment) != experiment:
        raise UsageError(f"config experiment {data['experiment']!r} does not match command {experiment!r}")
    return ExperimentConfig.from_dict({**data, "experiment": experiment})


def cmd_estimate(args) -> int:
    cfg = _load_config(args.config, "estimate")
    if args.threads:
        cfg = replace(cfg, threads=args.threads)
    payload = estimate(cfg, args.data, Path(args.config).parent)
    _write(Path(args.out), dumps(payload))
    r = payload["report"]
    print(f"pcic_gibbs={r['pcic_gibbs']:.6g} empirical_gibbs={r['empirical_gibbs']:.6g} "
          f"correction_v={r['correction_v']:.6g} -> {args.out}")
    for w in payload["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_replicate(args) -> int:
    experiment = args.experiment.replace("-", "_")
    cfg = _load_config(args.config, experiment)
    if args.threads:
        cfg = replace(cfg, threads=args.threads)
    rows, summary = run_experiment(cfg)
    out = Path(args.out)
    # threads only affects scheduling, so it is left out of the embedded config
    embedded = {**cfg.to_dict(), "threads": None}
    _write(out / f"{experiment}_rows.csv", _rows_csv(rows))
    _write(out / f"{experiment}_summary.json",
           dumps({"version": __version__, "config": embedded, "replications": cfg.replications, "summary": summary}))
    print(f"{len(rows)} rows -> {out / (experiment + '_rows.csv')}; summary -> {out / (experiment + '_summary.json')}")
    return EXIT_OK


def cmd_check(args) -> int:
    results = run_checks(seed=args.seed, quick=args.quick, fault=args.fault)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if args.out:
        _write(Path(args.out), dumps({"quick": args.quick, "seed": args.seed, "results": [r.to_dict() for r in results]}))
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    print(f"all {len(results)} checks passed")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcic", description="Posterior covariance risk estimates for quasi-Bayesian models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="estimate predictive risk on a CSV dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("replicate", help="run a replication study and write rows CSV plus summary JSON")
    p.add_argument("experiment", choices=["location", "dp-logistic", "outlier", "sensitivity"])
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("check", help="run the analytic self-check suite")
    p.add_argument("--quick", action="store_true", help="fewer draws, widened tolerances")
    p.add_argument("--seed", type=int, default=20220624)
    p.add_argument("--out", help="optional JSON file for the results")
    p.add_argument("--fault", choices=FAULTS, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("pcic: error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except SamplerError as exc:
        print(f"pcic: sampler failure: {exc}", file=sys.stderr)
        return EXIT_SAMPLER
    except (UsageError, ConfigError) as exc:
        print(f"pcic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PCICError as exc:
        print(f"pcic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
