import csv
import json
import math

import numpy as np
import pytest

from pcic import SamplerError, cli
from pcic.cli import EXIT_CHECK, EXIT_OK, EXIT_SAMPLER, EXIT_USAGE, main, read_csv
from pcic.config import ConfigError, ExperimentConfig

# the covariance-corrected estimator computed by a plain-Python loop on the same seeded normal draws
GOLDEN_PCIC = 1.0748769128184152


def loop_reference(xs, seed, M, beta, tau):
    n = len(xs)
    z = np.random.default_rng(np.random.SeedSequence([seed])).standard_normal((M, 1))[:, 0].tolist()
    a = n * beta * tau / (n * beta * tau + 1)
    S = 1 / (n * beta + 1 / tau)
    thetas = [a * sum(xs) / n + math.sqrt(S) * v for v in z]
    tg = v_sum = 0.0
    for x in xs:
        nus = [(x - t) ** 2 for t in thetas]
        ss = [-0.5 * beta * (x - t) ** 2 for t in thetas]
        tg += sum(nus) / M
        v_sum += sum(p * q for p, q in zip(nus, ss)) / M - (sum(nus) / M) * (sum(ss) / M)
    return tg / n - v_sum / n


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture
def loc(tmp_path):
    return (
        write(tmp_path / "cfg.json", json.dumps({"seed": 7, "M": 1000})),
        write(tmp_path / "data.csv", "x\n0.5\n1.5\n"),
    )


def test_golden_reference_value():
    assert loop_reference([0.5, 1.5], 7, 1000, 1.0, 10.0) == pytest.approx(GOLDEN_PCIC, rel=1e-14)


def test_estimate_golden(loc, tmp_path):
    cfg, data = loc
    out = tmp_path / "r.json"
    assert main(["estimate", "--config", cfg, "--data", data, "--out", str(out)]) == EXIT_OK
    payload = json.loads(out.read_text())
    rep = payload["report"]
    assert rep["pcic_gibbs"] == pytest.approx(GOLDEN_PCIC, rel=1e-12)
    assert rep["pcic_gibbs"] == pytest.approx(rep["empirical_gibbs"] - rep["correction_v"], abs=1e-15)
    assert set(rep) == {"empirical_gibbs", "empirical_plugin", "correction_v", "pcic_gibbs", "pcic_plugin",
                        "influence", "kappa3", "mc_se"}
    assert payload["config"]["seed"] == 7 and payload["provenance"]["seed"] == 7
    assert set(payload["kappa3_diagnostics"]) >= {"remainder_bound", "acceptable"}
    assert payload["data"]["n"] == 2


def test_estimate_is_byte_identical(loc, tmp_path):
    cfg, data = loc
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["estimate", "--config", cfg, "--data", data, "--out", str(a)])
    main(["estimate", "--config", cfg, "--data", data, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_constant_label_misclass_has_zero_correction(tmp_path):
    rows = "".join("5.0,1\n" for _ in range(30))
    data = write(tmp_path / "d.csv", "x,label\n" + rows)
    cfg = write(tmp_path / "c.json", json.dumps({"seed": 2, "model": "logistic", "loss": "misclass", "M": 500}))
    out = tmp_path / "r.json"
    assert main(["estimate", "--config", cfg, "--data", data, "--out", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())["report"]
    assert rep["correction_v"] == 0.0
    assert rep["empirical_gibbs"] == -1.0


def test_regression_with_weights_file(tmp_path):
    x = np.arange(1, 21) * 0.01
    x[-1] = 4.0
    y = x + np.random.default_rng(0).normal(size=20)
    data = write(tmp_path / "d.csv", "y,x\n" + "".join(f"{b},{a}\n" for a, b in zip(x, y)))
    write(tmp_path / "w.txt", "\n".join(["1"] * 19 + ["0"]))
    cfg = write(tmp_path / "c.json", json.dumps({"seed": 4, "model": "regression", "loss": "scaled_l1",
                                                 "M": 300, "weights": "w.txt"}))
    out = tmp_path / "r.json"
    assert main(["estimate", "--config", cfg, "--data", data, "--out", str(out)]) == EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["pcic_weighted"] is not None
    assert payload["provenance"]["sampler"] == "peruggia_gibbs"


def test_missing_file(loc, tmp_path, capsys):
    cfg, _ = loc
    code = main(["estimate", "--config", cfg, "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o")])
    assert code == EXIT_USAGE
    assert "none.csv" in capsys.readouterr().err


def test_malformed_row_reports_line(tmp_path):
    path = write(tmp_path / "bad.csv", "x,y\n1,2\n3,4\n5,oops\n")
    with pytest.raises(cli.UsageError, match=r"bad.csv:4"):
        read_csv(path)
    path = write(tmp_path / "short.csv", "x,y\n1,2\n3\n")
    with pytest.raises(cli.UsageError, match=r":3: expected 2 fields"):
        read_csv(path)


def test_incompatible_model_and_columns(tmp_path, loc, capsys):
    _, data = loc
    cfg = write(tmp_path / "c.json", json.dumps({"seed": 1, "model": "logistic", "loss": "brier"}))
    assert main(["estimate", "--config", cfg, "--data", data, "--out", str(tmp_path / "o")]) == EXIT_USAGE
    assert "label" in capsys.readouterr().err


def test_config_rules(tmp_path):
    with pytest.raises(ConfigError, match="bogus"):
        ExperimentConfig.from_dict({"experiment": "estimate", "seed": 1, "bogus": 2})
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_dict({"experiment": "estimate"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "location", "seed": 1, "n": 0})
    cfg = ExperimentConfig.from_dict({"experiment": "dp_logistic", "seed": 1})
    assert (cfg.M, cfg.burn_in, cfg.thin, cfg.n, cfg.n_test) == (3980, 100, 5, 50, 10)


def test_config_experiment_must_match_command(tmp_path):
    cfg = write(tmp_path / "c.json", json.dumps({"seed": 1, "experiment": "outlier"}))
    assert main(["replicate", "location", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["replicate", "nonsense", "--config", "x", "--out", "y"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE


def test_sampler_failure_exit_code(tmp_path, monkeypatch, capsys):
    def broken(*args, **kwargs):
        raise SamplerError("conditional precision is not positive definite")

    monkeypatch.setattr(cli, "peruggia_gibbs", broken)
    data = write(tmp_path / "d.csv", "x,y\n0.01,0\n0.02,1\n3,2\n")
    cfg = write(tmp_path / "c.json", json.dumps({"seed": 1, "model": "regression", "loss": "l2"}))
    assert main(["estimate", "--config", cfg, "--data", data, "--out", str(tmp_path / "o")]) == EXIT_SAMPLER
    assert "sampler failure" in capsys.readouterr().err


def test_replicate_location_outputs(tmp_path):
    cfg = write(tmp_path / "c.json", json.dumps({"seed": 3, "replications": 6, "M": 200, "n": 20, "n_test": 20}))
    out = tmp_path / "out"
    assert main(["replicate", "location", "--config", cfg, "--out", str(out)]) == EXIT_OK
    with open(out / "location_rows.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6 and {"pcic_gibbs", "test_gibbs", "draw_seed"} <= set(rows[0])
    summary = json.loads((out / "location_summary.json").read_text())
    assert {"mean", "se"} <= set(summary["summary"]["pcic_gibbs"])
    assert summary["config"]["seed"] == 3


def test_replicate_needs_two_replications(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", json.dumps({"seed": 3, "replications": 1, "M": 50}))
    assert main(["replicate", "location", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE
    assert "at least 2" in capsys.readouterr().err


def test_worker_count_does_not_change_results(tmp_path):
    cfg = write(tmp_path / "c.json", json.dumps({"seed": 9, "replications": 4, "M": 100, "n": 10, "n_test": 10}))
    for t in ("1", "2"):
        assert main(["replicate", "location", "--config", cfg, "--out", str(tmp_path / t), "--threads", t]) == 0
    for name in ("location_rows.csv", "location_summary.json"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes()


def test_check_quick_passes(capsys):
    assert main(["check", "--quick"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "all 8 checks passed" in out


def test_check_fault_is_caught(capsys):
    assert main(["check", "--quick", "--fault", "a_factor"]) == EXIT_CHECK
    captured = capsys.readouterr()
    assert "FAIL gap_closure" in captured.out and "gap_closure" in captured.err
    failing = [line for line in captured.out.splitlines() if line.startswith("FAIL")]
    assert len(failing) == 1 and "observed=" in failing[0] and "expected=" in failing[0]
