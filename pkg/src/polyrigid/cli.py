"""Command-line driver: ``polyrigid <command> [flags]``.

Settings come from flags and an optional ``--config`` file of ``key = value``
lines (``#`` starts a comment); flags override the file. Exit codes: 0 on
success, 1 on configuration or input errors, 2 on numerical failure.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import experiments as ex
from .grid import FieldFormatError
from .integrand import BUILTINS, get_integrand
from .pde import NumericalFailure

COMMANDS = ("laminate", "rigidity", "moments", "recover", "stationarity", "hpcheck")

DEFAULTS = {
    "integrand": "quad",
    "seed": 0,
    "out": None,
    "nosc": "5,10,20",
    "grid": None,
    "tol": None,
    "samples": None,
    "levels": "0.25,1,4",
    "map": "shear",
    "normalization": "mean_one",
    "interval": "-2,2",
}

# per-command defaults that differ from the shared table
COMMAND_DEFAULTS = {
    "laminate": {"samples": 10**6, "tol": 1e-12},
    "rigidity": {"nosc": "5,10,20,40"},
    "moments": {"grid": "1000", "tol": 1e-9},
    "recover": {"grid": "32,64,128"},
    "stationarity": {"grid": "32,64,128"},
    "hpcheck": {"samples": 2001},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    integrand: str = "quad"
    nosc: list = field(default_factory=list)
    grid: list = field(default_factory=list)
    seed: int = 0
    out: Optional[str] = None
    tol: Optional[float] = None
    samples: Optional[int] = None
    levels: list = field(default_factory=list)
    map: str = "shear"
    normalization: str = "mean_one"
    interval: tuple = (-2.0, 2.0)


def read_config_file(path):
    """Parse ``key = value`` lines; errors name the file and line."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror}") from None
    out = {}
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise ConfigError(f"{path}:{num}: expected 'key = value', got {raw!r}")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _int_list(name, text):
    try:
        vals = [int(tok) for tok in str(text).replace(" ", "").split(",") if tok]
    except ValueError:
        raise ConfigError(f"field {name!r}: expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"field {name!r}: list is empty")
    if any(v <= 0 for v in vals):
        raise ConfigError(f"field {name!r}: values must be positive")
    return vals


def _float_list(name, text):
    try:
        vals = [float(tok) for tok in str(text).replace(" ", "").split(",") if tok]
    except ValueError:
        raise ConfigError(f"field {name!r}: expected comma-separated numbers, got {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"field {name!r}: need at least one finite value")
    return vals


def _scalar(name, text, kind):
    try:
        return kind(text)
    except (TypeError, ValueError):
        raise ConfigError(f"field {name!r}: cannot parse {text!r}") from None


def build_config(command, file_values, flag_values):
    merged = dict(DEFAULTS)
    merged.update(COMMAND_DEFAULTS.get(command, {}))
    merged.update(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})

    if merged["integrand"] not in BUILTINS:
        raise ConfigError(f"field 'integrand': unknown label {merged['integrand']!r}; choose one of {sorted(BUILTINS)}")
    if merged["normalization"] not in ("mean_one", "pin_node"):
        raise ConfigError("field 'normalization': expected mean_one or pin_node")
    interval = _float_list("interval", merged["interval"])
    if len(interval) != 2 or not interval[0] < interval[1]:
        raise ConfigError("field 'interval': expected 'lo,hi' with lo < hi")
    cfg = ExperimentConfig(
        command=command,
        integrand=merged["integrand"],
        nosc=_int_list("nosc", merged["nosc"]),
        grid=_int_list("grid", merged["grid"]) if merged["grid"] is not None else [],
        seed=_scalar("seed", merged["seed"], int),
        out=merged["out"],
        tol=_scalar("tol", merged["tol"], float) if merged["tol"] is not None else None,
        samples=_scalar("samples", merged["samples"], int) if merged["samples"] is not None else None,
        levels=_float_list("levels", merged["levels"]),
        map=str(merged["map"]),
        normalization=merged["normalization"],
        interval=tuple(interval),
    )
    if cfg.tol is not None and not cfg.tol > 0:
        raise ConfigError("field 'tol': must be positive")
    if cfg.samples is not None and cfg.samples <= 0:
        raise ConfigError("field 'samples': must be positive")
    if command == "moments" and len(cfg.grid) != 1:
        raise ConfigError("field 'grid': moments takes a single weight-grid size")
    return cfg


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def format_csv(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def format_json(payload):
    return json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n"


def execute(cfg):
    """Run one experiment and return its serialized output text."""
    rng = np.random.default_rng(cfg.seed)
    gi = get_integrand(cfg.integrand)
    if cfg.command == "laminate":
        rows = ex.run_laminate(cfg.nosc, rng, samples=cfg.samples, tol=cfg.tol)
        return format_csv(ex.LAMINATE_COLUMNS, rows)
    if cfg.command == "rigidity":
        return format_csv(ex.RIGIDITY_COLUMNS, ex.run_rigidity(gi, cfg.nosc))
    if cfg.command == "moments":
        return format_json(ex.run_moments(gi, cfg.levels, cfg.grid[0], tol=cfg.tol))
    if cfg.command == "recover":
        return format_csv(ex.RECOVER_COLUMNS, ex.run_recover(cfg.map, cfg.grid, cfg.normalization))
    if cfg.command == "stationarity":
        return format_csv(ex.STATIONARITY_COLUMNS, ex.run_stationarity(gi, cfg.map, cfg.grid))
    if cfg.command == "hpcheck":
        return format_json(ex.run_hpcheck(gi, cfg.interval, cfg.samples))
    raise ConfigError(f"unknown command {cfg.command!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags take precedence")
    common.add_argument("--integrand", help=f"one of {', '.join(sorted(BUILTINS))}")
    common.add_argument("--seed", help="seed for the single run generator")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--grid", help="comma-separated grid sizes (cells per side)")
    common.add_argument("--nosc", help="comma-separated oscillation counts")
    common.add_argument("--tol", help="tolerance override")
    common.add_argument("--samples", help="Monte-Carlo or hp-check sample count")
    common.add_argument("--levels", help="comma-separated h levels (moments)")
    common.add_argument("--map", help="affine, shear, nonconst-det or a field file path")
    common.add_argument("--normalization", help="mean_one or pin_node (recover)")
    common.add_argument("--interval", help="lo,hi for hpcheck")

    parser = argparse.ArgumentParser(prog="polyrigid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:
        return 1 if stop.code else 0
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(args.command, file_values, flags)
        text = execute(cfg)
    except (ConfigError, FieldFormatError) as err:
        print(f"polyrigid: config error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"polyrigid: input error: {err}", file=sys.stderr)
        return 1
    except (NumericalFailure, ArithmeticError) as err:
        print(f"polyrigid: numerical failure: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"polyrigid: invalid input: {err}", file=sys.stderr)
        return 1

    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
