"""
Tests for the command-line entry point and the text reports.
"""
import json
from dataclasses import replace

import numpy as np

from cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, build_parser, run_cli
from experiments import fit_slope
from reporting import format_curve_table, format_diagnostics, format_metrics_table, format_slope_table
from serialization import TRIAL_SCHEMA, load_trial_csv

TINY_RATE = """
[experiment]
n_grid = 100, 200, 400
p = 20
trials = 2

[tails]
nu = 2.5

[solver]
iterations = 40
"""

TINY_INSTANCE = """
[experiment]
p = 20

[design]
kind = gaussian

[solver]
sparsity = 10
iterations = 100

[data]
n = 300
"""


def _ini(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _real_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((150, 6))
    y = 2.0 * X[:, 1] - 1.0 * X[:, 4] + 0.1 * rng.standard_t(3.0, 150)
    lines = ["a,b,c,d,e,f,y"] + [",".join(f"{v:.10g}" for v in row) + f",{t:.10g}" for row, t in zip(X, y)]
    path = tmp_path / "real.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def test_parser_knows_every_command():
    """All six commands parse with the shared options."""
    parser = build_parser()
    for command in ("rate-exp", "grad-exp", "compare", "solve", "init", "eval-real"):
        args = parser.parse_args([command, "--seed", "3"])
        assert args.command == command and args.seed == 3 and args.out == "results"
    assert parser.parse_args(["compare", "--model", "logistic"]).model == "logistic"


def test_usage_errors(tmp_path):
    """Unknown commands, missing configs and missing data sections exit with 2."""
    assert run_cli([]) == EXIT_USAGE
    assert run_cli(["fly"]) == EXIT_USAGE
    assert run_cli(["rate-exp", "--config", str(tmp_path / "missing.ini")]) == EXIT_USAGE
    assert run_cli(["eval-real", "--out", str(tmp_path)]) == EXIT_USAGE
    assert run_cli(["--help"]) == EXIT_OK


def test_rate_experiment_writes_outputs(tmp_path, clean_world):
    """rate-exp writes the trial CSV, the summary and the report."""
    out = tmp_path / "results"
    code = run_cli(["rate-exp", "--config", _ini(tmp_path, TINY_RATE), "--out", str(out)])
    assert code == EXIT_OK
    assert (out / "rate.csv").read_text().splitlines()[0] == TRIAL_SCHEMA
    assert len(load_trial_csv(str(out / "rate.csv"))) == 6
    summary = json.loads((out / "rate_summary.json").read_text())
    assert summary["kind"] == "rate" and len(summary["fits"]) == 1
    assert "Empirical vs. Theoretical Slopes" in (out / "rate_report.txt").read_text()


def test_rate_experiment_is_reproducible(tmp_path, clean_world):
    """Two runs with the same seed write identical errors and checksums."""
    config = _ini(tmp_path, TINY_RATE)
    for name in ("a", "b"):
        assert run_cli(["rate-exp", "--config", config, "--out", str(tmp_path / name), "--seed", "5"]) == EXIT_OK
    first = load_trial_csv(str(tmp_path / "a" / "rate.csv"))
    second = load_trial_csv(str(tmp_path / "b" / "rate.csv"))
    assert [(r.error, r.checksum, r.seed) for r in first] == [(r.error, r.checksum, r.seed) for r in second]
    assert first[0].seed == 5


def test_solve_and_init(tmp_path, capsys, clean_world):
    """solve and init print the l2 error of a generated instance and save the estimate."""
    config = _ini(tmp_path, TINY_INSTANCE)
    assert run_cli(["solve", "--config", config, "--out", str(tmp_path)]) == EXIT_OK
    assert "final l2 error:" in capsys.readouterr().out
    solved = json.loads((tmp_path / "solve.json").read_text())
    assert len(solved["estimate"]) == 20 and solved["error"] >= 0
    assert run_cli(["init", "--config", config, "--out", str(tmp_path)]) == EXIT_OK
    assert "initializer l2 error:" in capsys.readouterr().out
    assert len(json.loads((tmp_path / "init.json").read_text())["estimate"]) == 20


def test_solve_divergence_exits_with_numerical_error(tmp_path, capsys, clean_world):
    """A step size far above the curvature makes RIGHT diverge: exit 4."""
    config = _ini(tmp_path, TINY_INSTANCE.replace("iterations = 100", "iterations = 100\nstep_size = 100"),
                  "div.ini")
    assert run_cli(["solve", "--config", config, "--out", str(tmp_path)]) == EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_eval_real(tmp_path, capsys, clean_world):
    """eval-real reports a metric row per method and saves report and JSON."""
    config = _ini(tmp_path, f"""
[experiment]
seed = 1

[methods]
names = right, lasso

[solver]
sparsity = 2

[data]
path = {_real_csv(tmp_path)}
response = y
split = 0.8
""")
    assert run_cli(["eval-real", "--config", config, "--out", str(tmp_path)]) == EXIT_OK
    assert "Held-out Prediction Metrics" in capsys.readouterr().out
    payload = json.loads((tmp_path / "eval_real.json").read_text())
    assert [row["method"] for row in payload["metrics"]] == ["right", "lasso"]
    assert payload["n"] == 150 and payload["p"] == 6
    assert (tmp_path / "eval_real_report.txt").exists()


def test_data_errors_exit_with_3(tmp_path, clean_world):
    """A missing data file is a data error."""
    config = _ini(tmp_path, f"[data]\npath = {tmp_path / 'absent.csv'}\n")
    assert run_cli(["eval-real", "--config", config, "--out", str(tmp_path)]) == EXIT_DATA


def test_report_tables():
    """Slope, curve, metric and diagnostic tables hold their values."""
    fit = fit_slope([(np.log(300), 0.0), (np.log(600), -0.5)])
    slope_text = format_slope_table([replace(fit, tail_param=0.45, method="right", theoretical=-0.31)])
    assert "0.45" in slope_text and "-0.31" in slope_text
    curve_text = format_curve_table({(0.45, "right"): [(300, 1.5), (600, 0.75)], (0.45, "iht"): [(300, 9.0)]})
    assert "right" in curve_text and "iht" in curve_text and "0.75" in curve_text
    metrics = format_metrics_table([{"method": "right", "mape": 0.25, "mse": 0.125, "sd_mape": 0.01, "sd_mse": 0.02}])
    assert "0.2500" in metrics and "sd 0.0100" in metrics
    diagnostics = format_diagnostics({"feature_kurtosis": {"median": 1.0, "max": 40.0, "share_above_3": 0.25},
                                      "response_kurtosis": 2.0, "residual_quantiles": {0.05: -1.0, 0.95: 1.0}})
    assert "q5=-1" in diagnostics and "q95=1" in diagnostics
