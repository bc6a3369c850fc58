"""Experiment configuration: a flat key=value file format plus typed
validation. One file (or a handful of --set overrides) fully determines
a run, and the resolved values are written back next to the outputs so
every trace is reproducible from its own directory.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigError
from .objectives import OBJECTIVES

__all__ = [
    "ExperimentConfig",
    "parse_value",
    "parse_config_text",
    "parse_assignment",
    "build_config",
    "load_config",
    "config_to_flat",
]

OPTIMIZERS = ("apollo", "sgd", "adamw")
DECAYS = ("constant", "milestone", "cosine")


@dataclass
class ExperimentConfig:
    """Everything one experiment needs, flat.

    Optimizer-specific fields are all present regardless of which
    optimizer is selected; the irrelevant ones are ignored. threshold,
    when set, adds a steps-to-threshold column to the summary.
    """

    name: str = "run"
    objective: str = "rosenbrock"
    objective_args: dict = field(default_factory=dict)
    optimizer: str = "apollo"
    lr: float = 0.5
    beta: float = 0.9
    sigma: float = 1.0
    eps: float = 1e-4
    weight_decay: float = 0.0
    weight_decay_mode: str = "l2"
    clip_norm: float = 0.0
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    warmup_steps: int = 0
    warmup_start: float = 0.0
    decay: str = "constant"
    milestones: tuple = ()
    total_steps: int = 0
    steps: int = 1000
    seed: int = 0
    repeats: int = 1
    log_interval: int = 10
    threshold: float = None
    divergence_limit: float = 1e12
    out_dir: str = ""

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(
                f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}"
            )
        if self.objective not in OBJECTIVES:
            raise ConfigError(
                f"objective must be one of {tuple(sorted(OBJECTIVES))}, "
                f"got {self.objective!r}"
            )
        if self.decay not in DECAYS:
            raise ConfigError(f"decay must be one of {DECAYS}, got {self.decay!r}")
        if self.steps <= 0:
            raise ConfigError(f"steps must be positive, got {self.steps}")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.log_interval < 1:
            raise ConfigError(
                f"log_interval must be >= 1, got {self.log_interval}"
            )
        if self.warmup_steps < 0:
            raise ConfigError(
                f"warmup_steps must be >= 0, got {self.warmup_steps}"
            )
        if self.divergence_limit <= 0:
            raise ConfigError(
                f"divergence_limit must be positive, got {self.divergence_limit}"
            )


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def parse_value(raw: str):
    """String to the most specific of int, float, bool, None, str."""
    text = raw.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_milestones(raw) -> tuple:
    # "100:0.1,300:0.1" -> ((100, 0.1), (300, 0.1))
    if isinstance(raw, tuple):
        return raw
    text = str(raw).strip()
    if not text:
        return ()
    out = []
    for part in text.split(","):
        if ":" not in part:
            raise ConfigError(
                f"milestone {part!r} must look like step:factor"
            )
        step_s, factor_s = part.split(":", 1)
        try:
            out.append((int(step_s), float(factor_s)))
        except ValueError as exc:
            raise ConfigError(f"bad milestone entry {part!r}: {exc}") from None
    return tuple(out)


def parse_assignment(line: str) -> tuple:
    """One 'key=value' string to a (key, raw_value) pair."""
    if "=" not in line:
        raise ConfigError(f"expected key=value, got {line!r}")
    key, value = line.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"empty key in {line!r}")
    return key, value.strip()


def parse_config_text(text: str) -> dict:
    """Flat config body to an ordered key -> raw string mapping.

    Lines are key=value; blank lines and # comments are skipped.
    Duplicate keys keep the last occurrence, matching override order.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            key, value = parse_assignment(line)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
        out[key] = value
    return out


def build_config(mapping: dict) -> ExperimentConfig:
    """Raw key -> string mapping to a validated ExperimentConfig.

    Keys of the form objective.<arg> are collected into objective_args
    and handed to the objective constructor. Anything else must be a
    known field; typos fail loudly instead of silently using a default.
    """
    kwargs = {}
    obj_args = {}
    for key, raw in mapping.items():
        if key.startswith("objective."):
            sub = key[len("objective."):]
            if not sub:
                raise ConfigError(f"empty objective argument name in {key!r}")
            obj_args[sub] = parse_value(raw)
            continue
        if key == "objective_args":
            raise ConfigError(
                "set objective arguments as objective.<name>=value entries"
            )
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        if key == "milestones":
            kwargs[key] = _parse_milestones(raw)
        else:
            kwargs[key] = parse_value(raw)
    if obj_args:
        kwargs["objective_args"] = obj_args
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str = None, overrides: list = None) -> ExperimentConfig:
    """Config file plus --set overrides, overrides winning."""
    mapping = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                mapping.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for item in overrides or []:
        key, value = parse_assignment(item)
        mapping[key] = value
    return build_config(mapping)


def config_to_flat(cfg: ExperimentConfig) -> dict:
    """Back to a flat mapping, suitable for writing a resolved config
    file that load_config round-trips."""
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "objective_args":
            for k, v in value.items():
                out[f"objective.{k}"] = v
            continue
        if f.name == "milestones":
            out[f.name] = ",".join(f"{s}:{fac!r}" for s, fac in value)
            continue
        out[f.name] = value
    return out
