"""
Command-line entry point.

    python cli.py rate-exp  --preset desk --out ./results
    python cli.py grad-exp  --config grad.ini --out ./results
    python cli.py compare   --model logistic --out ./results
    python cli.py solve     --config instance.ini
    python cli.py init      --config instance.ini
    python cli.py eval-real --config riboflavin.ini --out ./results

Exit codes: 0 ok, 2 usage or configuration error, 3 data error, 4 numerical failure.
"""
import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

import numpy as np

from components import ExperimentKind, ModelKind, TrialSetup
from config import RunConfig, load_config
from dantzig import dantzig_init, multi_dantzig_init
from errors import (ConfigError, DataError, DivergenceError, LinearProgramError,
                    NonFiniteValueError, RobustRegressionError)
from experiments import comparison_spec, run_comparison, run_gradient_experiment, run_rate_experiment
from linalg import SupportSet, parameter_error
from method_registry import get_registry
from reporting import experiment_report, format_diagnostics, format_metrics_table, write_report
from samplers import RngStream
from scenarios import scenario_for
from serialization import experiment_summary, write_summary_json, write_trial_csv
from tabular import eval_real, evaluation_spec, load_csv, robust_standardize

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
COMMANDS = ("rate-exp", "grad-exp", "compare", "solve", "init", "eval-real")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="right", description="Robust sparse regression experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        command = sub.add_parser(name)
        command.add_argument("--config", help="INI configuration file")
        command.add_argument("--out", default="results", help="output directory")
        command.add_argument("--seed", type=int, help="master seed override")
        command.add_argument("--preset", choices=("desk", "paper"), help="base preset")
        command.add_argument("--threads", type=int, help="worker threads per batch")
        command.add_argument("--verbose", action="store_true", help="debug logging")
        if name in ("compare", "solve", "init"):
            command.add_argument("--model", choices=[m.value for m in ModelKind], help="model kind")
    return parser


def _configure(args, kind: ExperimentKind) -> RunConfig:
    run = load_config(args.config, kind, args.preset, args.seed)
    spec = run.spec
    model = getattr(args, "model", None)
    if model and ModelKind(model) != spec.model:
        if args.config:
            spec = replace(spec, model=ModelKind(model))
        else:
            spec = comparison_spec(args.preset or "desk", ModelKind(model))
            if args.seed is not None:
                spec = replace(spec, seed=args.seed)
    if args.threads:
        spec = replace(spec, threads=args.threads)
    return replace(run, spec=spec)


def _emit(result, out_dir: str, stem: str):
    write_trial_csv(result.records, os.path.join(out_dir, f"{stem}.csv"))
    write_summary_json(experiment_summary(result), os.path.join(out_dir, f"{stem}_summary.json"))
    report = experiment_report(result)
    write_report(report, out_dir, f"{stem}_report.txt")
    print(report)


def _run_experiment(args) -> int:
    kind = {"rate-exp": ExperimentKind.RATE, "grad-exp": ExperimentKind.GRADIENT,
            "compare": ExperimentKind.COMPARISON}[args.command]
    spec = _configure(args, kind).spec
    runner = {ExperimentKind.RATE: run_rate_experiment, ExperimentKind.GRADIENT: run_gradient_experiment,
              ExperimentKind.COMPARISON: run_comparison}[kind]
    result = runner(spec)
    stem = kind.value if spec.model == ModelKind.LINEAR else f"{kind.value}_{spec.model.value}"
    _emit(result, args.out, stem)
    return EXIT_OK


def _instance(run: RunConfig):
    """A generated instance (trial 0, first tail setting) with its truth."""
    spec = replace(run.spec, kind=ExperimentKind.COMPARISON)
    n = run.data.n or spec.n_grid[-1]
    spec = replace(spec, n_grid=(n,))
    scenario = scenario_for(spec)
    setting = spec.tails[0]
    setup = TrialSetup(experiment=spec.name, setting_index=0, tail_param=setting.index, nu=setting.nu,
                       n=n, trial=0, seed=spec.seed)
    data = scenario.generate(setup)
    return spec, scenario, data


def _real_dataset(run: RunConfig):
    ds = load_csv(run.data.path, run.data.response, run.data.has_header)
    return robust_standardize(ds) if run.data.standardize else ds


def _write_json(payload: dict, out_dir: str, name: str):
    path = os.path.join(out_dir, name)
    write_summary_json(payload, path)


def _run_solve(args) -> int:
    run = _configure(args, ExperimentKind.COMPARISON)
    registry = get_registry()
    if run.data.path:
        ds = _real_dataset(run)
        spec = evaluation_spec(ds, sparsity=run.spec.s, methods=("right",), seed=run.spec.seed)
        estimate = registry.fit("right", ds.as_dataset(), spec, scenario_for(spec).model,
                                RngStream(spec.seed, 0))
        support = SupportSet.of(estimate)
        print(f"selected features: {', '.join(ds.feature_names[j] for j in support.indices)}")
        _write_json({"estimate": estimate, "support": list(support.indices)}, args.out, "solve.json")
        return EXIT_OK
    spec, scenario, data = _instance(run)
    estimate = registry.fit("right", data.dataset, spec, scenario.model, RngStream(spec.seed, 0).fork(1))
    error = parameter_error(estimate, data.truth)
    print(f"final l2 error: {error:.6g}")
    _write_json({"estimate": estimate, "error": error, "checksum": data.checksum}, args.out, "solve.json")
    return EXIT_OK


def _run_init(args) -> int:
    run = _configure(args, ExperimentKind.COMPARISON)
    if run.data.path:
        ds = _real_dataset(run)
        estimate = dantzig_init(ds.as_dataset(), run.spec.dantzig)
        print(f"initializer l1 norm: {float(np.sum(np.abs(estimate))):.6g}")
        _write_json({"estimate": estimate}, args.out, "init.json")
        return EXIT_OK
    spec, scenario, data = _instance(run)
    if spec.model == ModelKind.MULTI:
        estimate = multi_dantzig_init(data.dataset, spec.dantzig)
    else:
        estimate = dantzig_init(data.dataset, spec.dantzig)
    error = parameter_error(estimate, data.truth)
    print(f"initializer l2 error: {error:.6g}")
    _write_json({"estimate": estimate, "error": error, "checksum": data.checksum}, args.out, "init.json")
    return EXIT_OK


def _run_eval_real(args) -> int:
    run = _configure(args, ExperimentKind.COMPARISON)
    if not run.data.path:
        raise ConfigError("eval-real needs [data] path in the config file")
    ds = _real_dataset(run)
    spec = evaluation_spec(ds, sparsity=run.spec.s, methods=run.spec.methods, seed=run.spec.seed)
    report = eval_real(ds, run.data.split, run.spec.methods, run.spec.seed, run.data.repeats, spec)
    text = format_metrics_table(report.rows) + "\n" + format_diagnostics(report.diagnostics)
    print(text)
    write_report(text, args.out, "eval_real_report.txt")
    _write_json({"metrics": report.rows, "diagnostics": report.diagnostics,
                 "n": ds.n, "p": ds.p, "dropped_rows": ds.dropped_rows}, args.out, "eval_real.json")
    return EXIT_OK


HANDLERS = {"rate-exp": _run_experiment, "grad-exp": _run_experiment, "compare": _run_experiment,
            "solve": _run_solve, "init": _run_init, "eval-real": _run_eval_real}


def run_cli(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run the command and map failures to exit codes.

    Returns:
        0 on success, 2 usage/config, 3 data, 4 numerical failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        return HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DivergenceError, LinearProgramError, NonFiniteValueError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RobustRegressionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
