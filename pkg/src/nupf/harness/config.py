"""Flat key-value experiment configuration.

A config file is plain text, one ``key = value`` per line, ``#`` starts a
comment. The ``experiment`` key selects the experiment and fixes the set
of legal keys and their types; every other key overrides a documented
default. Values are typed by their defaults: bools are ``true``/``false``,
grids are comma-separated numbers.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from ..errors import ConfigError

__all__ = ["ExperimentConfig", "config_load", "config_loads", "config_dump",
           "default_config", "OUT_DIR_ENV"]

OUT_DIR_ENV = "NUPF_OUT_DIR"

# reserved keys shared by every experiment
_COMMON_DEFAULTS = {"seed": 0, "threads": 1}
_COMMON_DOC = {
    "seed": "master seed; run i derives its stream from (seed, i)",
    "threads": "worker processes for run-level parallelism",
    "runs": "number of independent Monte Carlo runs",
    "out": "output directory for CSV files",
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    runs: int = 1
    threads: int = 1
    out_dir: str = ""
    params: dict = field(default_factory=dict)

    def resolved_out_dir(self) -> Path:
        if self.out_dir:
            return Path(self.out_dir)
        return Path(os.environ.get(OUT_DIR_ENV, "."))


def _registry():
    from .experiments import EXPERIMENTS  # deferred: experiments imports this module
    return EXPERIMENTS


def default_config(experiment: str) -> ExperimentConfig:
    reg = _registry()
    if experiment not in reg:
        raise ConfigError(f"unknown experiment {experiment!r}; "
                          f"known: {', '.join(sorted(reg))}")
    exp = reg[experiment]
    return ExperimentConfig(experiment=experiment, seed=0, runs=exp.default_runs,
                            threads=1, out_dir="", params=dict(exp.defaults))


def _parse_value(key: str, text: str, default, lineno: int):
    kind = type(default)
    try:
        if kind is bool:
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError
            return low == "true"
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is str:
            return text
        if kind is tuple:
            elem = type(default[0]) if default else float
            return tuple(elem(part.strip()) for part in text.split(",") if part.strip())
    except ValueError:
        pass
    raise ConfigError(f"line {lineno}: cannot parse value for key {key!r}: {text!r}")


def config_loads(text: str) -> ExperimentConfig:
    pairs: list[tuple[str, str, int]] = []
    experiment = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "experiment":
            experiment = value
        else:
            pairs.append((key, value, lineno))
    if experiment is None:
        raise ConfigError("config is missing the 'experiment' key")
    cfg = default_config(experiment)
    for key, value, lineno in pairs:
        if key == "seed":
            cfg.seed = _parse_value(key, value, 0, lineno)
        elif key == "runs":
            cfg.runs = _parse_value(key, value, 0, lineno)
        elif key == "threads":
            cfg.threads = _parse_value(key, value, 0, lineno)
        elif key == "out":
            cfg.out_dir = value
        elif key in cfg.params:
            cfg.params[key] = _parse_value(key, value, cfg.params[key], lineno)
        else:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} for experiment {experiment!r}")
    if cfg.runs < 1:
        raise ConfigError("runs must be >= 1")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    return cfg


def config_load(path: Union[str, Path]) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_loads(text)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_dump(cfg: ExperimentConfig, documented: bool = False) -> str:
    """Serialize a config; ``config_loads(config_dump(c))`` equals ``c``."""
    doc = _registry()[cfg.experiment].doc if documented else {}
    lines = []

    def emit(key, value):
        comment = doc.get(key) or (_COMMON_DOC.get(key) if documented else None)
        if comment:
            lines.append(f"# {comment}")
        lines.append(f"{key} = {_format_value(value)}")

    emit("experiment", cfg.experiment)
    emit("seed", cfg.seed)
    emit("runs", cfg.runs)
    emit("threads", cfg.threads)
    if cfg.out_dir:
        emit("out", cfg.out_dir)
    for key in sorted(cfg.params):
        emit(key, cfg.params[key])
    return "\n".join(lines) + "\n"
