"""
INI configuration: flat key-value sections applied on top of a preset
ExperimentSpec.

    [experiment]  name, model, preset, seed, trials, n_grid, p, s_star, m, truth,
                  batch_size, threads, censor_value
    [design]      kind, nu, scale, alpha, location, gamma, shift
    [noise]       same keys as [design]
    [tails]       target (noise | design), nu (list), index (list, optional)
    [solver]      sparsity, step_size, iht_step_size, iterations, blocks (int | auto),
                  block_rule, block_multiplier, tune_blocks, partition, init
    [methods]     names (list)
    [baselines]   lasso_lambda (float | cv), lasso_folds, huber_tau (float | auto),
                  huber_lambda (float | cv), shrinkage_quantile_x, shrinkage_quantile_y,
                  dantzig_tau_x, dantzig_tau_yx, dantzig_radius (float | auto)
    [data]        path, response, has_header, split, repeats, standardize, n

Lists are comma separated. Unknown sections or keys are errors.
"""
import configparser
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional

from baselines import AUTO, CV
from components import DistributionKind, ExperimentKind, ModelKind, PartitionMode, TailSetting
from errors import ConfigError, RobustRegressionError
from experiments import PRESET_NAMES, preset_spec
from scenarios import ExperimentSpec, TailTarget, TruthKind, design_tail_index, noise_tail_index
from solvers import BlockRule

logger = logging.getLogger(__name__)

_DISTRIBUTION_KEYS = ("kind", "nu", "scale", "alpha", "location", "gamma", "shift")
SCHEMA: Dict[str, tuple] = {
    "experiment": ("name", "model", "preset", "seed", "trials", "n_grid", "p", "s_star", "m", "truth",
                   "batch_size", "threads", "censor_value"),
    "design": _DISTRIBUTION_KEYS,
    "noise": _DISTRIBUTION_KEYS,
    "tails": ("target", "nu", "index"),
    "solver": ("sparsity", "step_size", "iht_step_size", "iterations", "blocks", "block_rule",
               "block_multiplier", "tune_blocks", "partition", "init"),
    "methods": ("names",),
    "baselines": ("lasso_lambda", "lasso_folds", "huber_tau", "huber_lambda", "shrinkage_quantile_x",
                  "shrinkage_quantile_y", "dantzig_tau_x", "dantzig_tau_yx", "dantzig_radius"),
    "data": ("path", "response", "has_header", "split", "repeats", "standardize", "n"),
}


@dataclass(frozen=True)
class DataSettings:
    """Real-data and single-instance settings."""
    path: Optional[str] = None
    response: str = "y"
    has_header: bool = True
    split: float = 0.8
    repeats: int = 1
    standardize: bool = True
    n: Optional[int] = None  # instance size for solve/init; None uses the largest n of the grid


@dataclass(frozen=True)
class RunConfig:
    spec: ExperimentSpec
    data: DataSettings = field(default_factory=DataSettings)


def _list(text: str, convert: Callable) -> tuple:
    return tuple(convert(item.strip()) for item in text.split(",") if item.strip())


def _float_or(sentinel: str) -> Callable[[str], object]:
    def convert(text: str):
        return sentinel if text.strip().lower() == sentinel else float(text)
    return convert


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "yes", "true", "on"):
        return True
    if value in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {text}")


def read_config(path: str) -> configparser.ConfigParser:
    """Parse and schema-check an INI file."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        with open(path) as f:
            parser.read_file(f)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
    return parser


def _distribution(base, section: configparser.SectionProxy):
    fields = {}
    for key, value in section.items():
        if key == "kind":
            fields["kind"] = DistributionKind(value.strip())
        else:
            fields[key] = float(value)
    return replace(base, **fields)


def _apply(spec: ExperimentSpec, parser: configparser.ConfigParser) -> ExperimentSpec:
    updates = {}
    converters = {
        "name": str, "seed": int, "trials": int, "p": int, "s_star": int, "m": int,
        "batch_size": int, "threads": int, "censor_value": float,
        "n_grid": lambda t: _list(t, int), "truth": TruthKind,
    }
    if parser.has_section("experiment"):
        for key, value in parser["experiment"].items():
            if key in converters:
                updates[key] = converters[key](value.strip())
    if parser.has_section("design"):
        updates["design"] = _distribution(spec.design, parser["design"])
    if parser.has_section("noise"):
        updates["noise"] = _distribution(spec.noise, parser["noise"])
    if parser.has_section("tails"):
        section = parser["tails"]
        target = TailTarget(section.get("target", spec.tail_target.value).strip())
        updates["tail_target"] = target
        if "nu" in section:
            nus = _list(section["nu"], float)
            derive = noise_tail_index if target == TailTarget.NOISE else design_tail_index
            indices = _list(section["index"], float) if "index" in section else tuple(derive(nu) for nu in nus)
            if len(indices) != len(nus):
                raise ConfigError("[tails] nu and index lists differ in length")
            updates["tails"] = tuple(TailSetting(nu=nu, index=idx) for nu, idx in zip(nus, indices))
    if parser.has_section("solver"):
        solver = {
            "sparsity": int, "step_size": float, "iht_step_size": float, "iterations": int,
            "blocks": lambda t: None if t.strip().lower() == AUTO else int(t),
            "block_rule": BlockRule, "block_multiplier": float, "tune_blocks": _bool,
            "partition": PartitionMode, "init": str,
        }
        for key, value in parser["solver"].items():
            target_key = "partition_mode" if key == "partition" else key
            updates[target_key] = solver[key](value.strip())
    if parser.has_section("methods") and "names" in parser["methods"]:
        updates["methods"] = _list(parser["methods"]["names"], str)
    if parser.has_section("baselines"):
        updates.update(_baselines(spec, parser["baselines"]))
    return replace(spec, **updates)


def _baselines(spec: ExperimentSpec, section: configparser.SectionProxy) -> dict:
    lasso, huber, shrinkage, dantzig = spec.lasso, spec.huber, spec.shrinkage, spec.dantzig
    if "lasso_lambda" in section:
        lasso = replace(lasso, lam=_float_or(CV)(section["lasso_lambda"]))
    if "lasso_folds" in section:
        lasso = replace(lasso, folds=int(section["lasso_folds"]))
    if "huber_tau" in section:
        huber = replace(huber, tau=_float_or(AUTO)(section["huber_tau"]))
    if "huber_lambda" in section:
        huber = replace(huber, lam=_float_or(CV)(section["huber_lambda"]))
    if "shrinkage_quantile_x" in section:
        shrinkage = replace(shrinkage, quantile_x=float(section["shrinkage_quantile_x"]))
    if "shrinkage_quantile_y" in section:
        shrinkage = replace(shrinkage, quantile_y=float(section["shrinkage_quantile_y"]))
    shrinkage = replace(shrinkage, lasso=lasso)
    for key, name in (("dantzig_tau_x", "tau_x"), ("dantzig_tau_yx", "tau_yx"), ("dantzig_radius", "radius")):
        if key in section:
            dantzig = replace(dantzig, **{name: _float_or(AUTO)(section[key])})
    return {"lasso": lasso, "huber": huber, "shrinkage": shrinkage, "dantzig": dantzig}


def _data_settings(parser: configparser.ConfigParser) -> DataSettings:
    if not parser.has_section("data"):
        return DataSettings()
    section = parser["data"]
    converters = {"path": str, "response": str, "has_header": _bool, "split": float,
                  "repeats": int, "standardize": _bool, "n": int}
    return DataSettings(**{key: converters[key](value.strip()) for key, value in section.items()})


def load_config(path: Optional[str], kind: ExperimentKind, preset: Optional[str] = None,
                seed: Optional[int] = None) -> RunConfig:
    """
    Build the run configuration for a command.

    Args:
        path: INI file, or None for the preset alone
        kind: experiment kind implied by the command
        preset: preset name; overrides [experiment] preset
        seed: master seed override

    Returns:
        RunConfig with the final ExperimentSpec and data settings

    Raises:
        ConfigError: missing file, unknown keys or invalid values
    """
    parser = read_config(path) if path else configparser.ConfigParser()
    try:
        section = parser["experiment"] if parser.has_section("experiment") else {}
        preset = preset or section.get("preset", "desk").strip()
        if preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset '{preset}', expected one of {PRESET_NAMES}")
        model = ModelKind(section.get("model", "linear").strip())
        spec = _apply(preset_spec(kind, preset, model), parser)
        if seed is not None:
            spec = replace(spec, seed=seed)
        data = _data_settings(parser)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError, RobustRegressionError) as exc:
        raise ConfigError(f"invalid configuration{f' in {path}' if path else ''}: {exc}") from exc
    logger.debug("[EXPERIMENT] configuration: %s", spec)
    return RunConfig(spec=spec, data=data)
