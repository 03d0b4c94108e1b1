"""Run configuration: one JSON document, strict keys, CLI flags win.

The defaults reproduce the full benchmark protocol (45 train / 100 val / 100
test episodes per scenario); CLI overrides shrink it to desk scale.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any

from .detector import DetectorConfig
from .errors import ConfigError
from .features import KernelParams, VARIANTS
from .iforest import ForestConfig
from .suite import DEFAULT_CARTPOLE, DEFAULT_LINEAR

DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 0,
    "detector": {
        "w": 10,
        "kernel": {"s": 1.5, "sigma": None},  # sigma null -> heuristic or tuning
        "variant": "full",
        "forest": {"n_trees": 100, "subsample": 256, "max_depth": None, "seed": None},
    },
    "episodes": {"train": 45, "val": 100, "test": 100, "length": 100, "onset": 50},
    "grid": {
        "plants": ["cartpole", "linear"],
        "ar_kinds": ["arno", "arns"],
        "ar_levels": ["light", "medium", "strong"],
        "ar_orders": [1, 2],
        "semantic_kinds": [],
        "semantic_levels": ["minor", "severe"],
    },
    "plants": {"cartpole": dict(DEFAULT_CARTPOLE), "linear": dict(DEFAULT_LINEAR)},
    "cusum": None,
    "eval": {"fpr": 0.05},
}

# optional sections that default to None but carry a keyed schema when present
_CUSUM_KEYS = {"false_alarm_rate", "kappa_mult", "heldout_fraction"}
_CUSUM_DEFAULTS = {"false_alarm_rate": 0.05, "kappa_mult": 0.25, "heldout_fraction": 0.2}


def load_run_config(path: str | Path | None) -> dict[str, Any]:
    """Defaults overlaid with the user's JSON; unknown keys are rejected."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path is None:
        return config
    with open(path, "r", encoding="utf-8") as fh:
        try:
            user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    _merge_strict(config, user, path=str(path), trail="")
    if config["cusum"] is not None:
        config["cusum"] = {**_CUSUM_DEFAULTS, **config["cusum"]}
    _validate(config)
    return config


def _merge_strict(base: dict[str, Any], user: dict[str, Any], path: str, trail: str) -> None:
    for key, value in user.items():
        here = f"{trail}.{key}" if trail else key
        if key not in base:
            raise ConfigError(f"{path}: unknown config key {here!r}")
        if key == "cusum":
            if value is not None:
                if not isinstance(value, dict):
                    raise ConfigError(f"{path}: {here} must be an object or null")
                bad = set(value) - _CUSUM_KEYS
                if bad:
                    raise ConfigError(f"{path}: unknown config key {here}.{sorted(bad)[0]!r}")
            base[key] = value
        elif isinstance(base[key], dict) and isinstance(value, dict):
            _merge_strict(base[key], value, path, here)
        else:
            base[key] = value


def _validate(config: dict[str, Any]) -> None:
    det = config["detector"]
    if det["variant"] not in VARIANTS:
        raise ConfigError(f"detector.variant must be one of {VARIANTS}, got {det['variant']!r}")
    if det["w"] < 2:
        raise ConfigError(f"detector.w must be >= 2, got {det['w']}")
    eps = config["episodes"]
    for key in ("train", "val", "test", "length"):
        if int(eps[key]) < 1:
            raise ConfigError(f"episodes.{key} must be >= 1, got {eps[key]}")
    if not 1 <= int(eps["onset"]) < int(eps["length"]):
        raise ConfigError(f"episodes.onset must be in [1, length), got {eps['onset']}")
    if int(config["seed"]) < 0:
        raise ConfigError(f"seed must be non-negative, got {config['seed']}")
    if not 0 < float(config["eval"]["fpr"]) < 1:
        raise ConfigError(f"eval.fpr must be in (0, 1), got {config['eval']['fpr']}")


def detector_config(config: dict[str, Any], sigma: float, variant: str | None = None) -> DetectorConfig:
    """Concrete DetectorConfig with a resolved sigma (and optional variant override)."""
    det = config["detector"]
    forest_seed = det["forest"]["seed"]
    if forest_seed is None:
        forest_seed = int(config["seed"])
    return DetectorConfig(
        w=int(det["w"]),
        kernel=KernelParams(s=float(det["kernel"]["s"]), sigma=float(sigma)),
        variant=variant or det["variant"],
        forest=ForestConfig(
            n_trees=int(det["forest"]["n_trees"]),
            subsample=int(det["forest"]["subsample"]),
            max_depth=None if det["forest"]["max_depth"] is None else int(det["forest"]["max_depth"]),
            seed=int(forest_seed),
        ),
    )
