"""
Run configuration.

An INI file with sections [paths] [segment] [indicator] [policy] [train]
[env] [eval] [run]; every key has a default in DEFAULTS and unknown keys are
rejected. ``--set section.key=value`` overrides win over the file. The
resolved configuration is hashed as canonical JSON; stage cache keys hash
only the sections a stage depends on.
"""
import configparser
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from indicator.model import IndicatorHyper
from policy.config import TRAIN_MODES, PolicyConfig, TrainConfig
from segment.params import SegParams
from sim.env import EnvConfig
from trajcore.errors import ArgumentError, ConfigError

logger = logging.getLogger(__name__)

CACHE_ENV_VAR = "GAP_CACHE_DIR"
DEFAULT_CACHE_DIR = ".gap_cache"


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_int(text: str) -> Optional[int]:
    return None if text.strip() in ("", "none") else int(text)


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _str_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


# section -> key -> (parser, default text)
DEFAULTS: Dict[str, Dict[str, Tuple[object, str]]] = {
    "paths": {
        "out_dir": (str, "runs/default"),
    },
    "segment": {
        "alpha": (float, "1.0"),
        "beta": (float, "0.002"),
        "penalty": (float, "0.005"),
        "k_changes": (_optional_int, ""),
        "min_phase_len": (int, "3"),
        "distance_mode": (str, "gap"),
        "mismatch_penalty": (_bool, "false"),
        "tolerance": (int, "2"),
    },
    "indicator": {
        "window": (int, "3"),
        "w_low": (float, "0.2"),
        "hidden_dim": (int, "32"),
        "epochs": (int, "200"),
        "lr": (float, "0.001"),
        "batch_size": (int, "32"),
        "noise_p": (float, "0.0"),
        "sigma": (float, "2.0"),
        "heldout": (int, "20"),
    },
    "policy": {
        "H": (int, "2"),
        "L": (int, "1"),
        "vision_hidden": (int, "64"),
        "proprio_hidden": (int, "32"),
        "head_hidden": (int, "64"),
    },
    "train": {
        "epochs": (int, "100"),
        "gap_epochs": (_optional_int, ""),
        "lam": (float, "0.3"),
        "batch_size": (int, "64"),
        "lr": (float, "0.001"),
        "optimizer": (str, "adam"),
        "mask_prob": (float, "0.5"),
        "rho_fixed": (float, "0.3"),
        "rho_fixed_scope": (str, "global"),
        "adjust_rule": (str, "literal"),
        "per_sample_rho": (_bool, "false"),
        "adjust_head_proprio": (_bool, "false"),
        "log_every": (int, "10"),
    },
    "env": {
        "task": (str, "translate"),
        "grid": (int, "16"),
        "max_steps": (int, "80"),
        "action_scale": (float, "0.05"),
        "grasp_radius": (float, "0.05"),
        "place_radius": (float, "0.05"),
        "render": (str, "bilinear"),
    },
    "eval": {
        "n_demos": (int, "100"),
        "n_id": (int, "100"),
        "n_ood": (int, "100"),
        "intervention": (_bool, "false"),
        "intervene_rollouts": (int, "20"),
        "window_width": (int, "10"),
        "stride": (int, "5"),
        "margin": (int, "3"),
        "probe": (_bool, "false"),
        "probe_epochs": (int, "50"),
    },
    "run": {
        "seeds": (_int_list, "0,1,2,3,4"),
        "modes": (_str_list, "vision,concat,gap,mask,fixed,smooth"),
    },
}

FIXED_SCOPES = ("global", "change_points")

# sections each pipeline stage depends on, upstream stages included
STAGE_SECTIONS = {
    "demos": ("env", "eval.n_demos"),
    "segment": ("env", "eval.n_demos", "segment"),
    "indicator": ("env", "eval.n_demos", "segment", "indicator"),
    "policy": ("env", "eval.n_demos", "segment", "indicator", "policy", "train"),
    "evaluate": ("env", "eval.n_demos", "segment", "indicator", "policy", "train",
                 "eval.n_id", "eval.n_ood"),
    "intervene": ("env", "eval.n_demos", "segment", "indicator", "policy", "train",
                  "eval.intervene_rollouts", "eval.window_width", "eval.stride", "eval.margin"),
    "probe": ("env", "eval.n_demos", "segment", "indicator", "policy", "train",
              "eval.probe_epochs", "eval.n_id", "eval.n_ood"),
}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_of(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: typed settings plus the raw values they came from."""

    values: Dict[str, Dict[str, object]] = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.values[section][key]

    @property
    def out_dir(self) -> Path:
        return Path(self.get("paths", "out_dir"))

    @property
    def cache_dir(self) -> Path:
        return Path(os.environ.get(CACHE_ENV_VAR, DEFAULT_CACHE_DIR))

    @property
    def seeds(self) -> List[int]:
        return list(self.get("run", "seeds"))

    @property
    def modes(self) -> List[str]:
        return list(self.get("run", "modes"))

    @property
    def hash(self) -> str:
        return sha256_of(self.values)

    def seg_params(self) -> SegParams:
        s = self.values["segment"]
        penalty = None if s["k_changes"] is not None else s["penalty"]
        return SegParams(alpha=s["alpha"], beta=s["beta"], penalty=penalty,
                         k_changes=s["k_changes"], min_phase_len=s["min_phase_len"],
                         distance_mode=s["distance_mode"],
                         mismatch_penalty=s["mismatch_penalty"])

    def indicator_hyper(self, seed: int) -> IndicatorHyper:
        s = self.values["indicator"]
        return IndicatorHyper(epochs=s["epochs"], lr=s["lr"], hidden_dim=s["hidden_dim"],
                              seed=seed, batch_size=s["batch_size"], window=s["window"],
                              w_low=s["w_low"])

    def policy_config(self) -> PolicyConfig:
        return PolicyConfig(**self.values["policy"])

    def train_config(self, seed: int) -> TrainConfig:
        s = dict(self.values["train"])
        for key in ("rho_fixed", "rho_fixed_scope"):
            s.pop(key)
        return TrainConfig(seed=seed, **s)

    def env_config(self) -> EnvConfig:
        return EnvConfig(**self.values["env"])

    def stage_key(self, stage: str, seed: int, mode: Optional[str] = None) -> str:
        subset = {}
        for name in STAGE_SECTIONS[stage]:
            section, _, key = name.partition(".")
            if key:
                subset[name] = self.values[section][key]
            else:
                subset[name] = self.values[section]
        return sha256_of({"stage": stage, "seed": seed, "mode": mode, "config": subset})

    def with_overrides(self, overrides: Iterable[str]) -> "RunConfig":
        raw = {s: {k: unparse(v) for k, v in keys.items()} for s, keys in self.values.items()}
        for item in overrides:
            section, key, value = parse_override(item)
            raw[section][key] = value
        return RunConfig(_resolve(raw))

    def to_ini(self) -> str:
        lines = []
        for section, keys in self.values.items():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {unparse(v)}" for k, v in keys.items())
            lines.append("")
        return "\n".join(lines)


def unparse(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    return str(value)


def parse_override(item: str) -> Tuple[str, str, str]:
    name, sep, value = item.partition("=")
    section, dot, key = name.strip().partition(".")
    if not sep or not dot:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    if section not in DEFAULTS or key not in DEFAULTS[section]:
        raise ConfigError(f"unknown configuration key {section}.{key}")
    return section, key, value.strip()


def _resolve(raw: Dict[str, Dict[str, str]]) -> Dict[str, Dict[str, object]]:
    values = {}
    for section, keys in DEFAULTS.items():
        values[section] = {}
        for key, (parse, default) in keys.items():
            text = raw.get(section, {}).get(key, default)
            try:
                values[section][key] = parse(text)
            except ValueError as e:
                raise ConfigError(f"{section}.{key}: {e}") from None
    _validate(values)
    return values


def _validate(values) -> None:
    if not values["run"]["seeds"]:
        raise ConfigError("run.seeds must list at least one seed")
    unknown = [m for m in values["run"]["modes"] if m not in TRAIN_MODES]
    if unknown or not values["run"]["modes"]:
        raise ConfigError(f"run.modes must be a non-empty subset of {TRAIN_MODES}, "
                          f"got {values['run']['modes']}")
    if values["train"]["rho_fixed_scope"] not in FIXED_SCOPES:
        raise ConfigError(f"train.rho_fixed_scope must be one of {FIXED_SCOPES}")
    if not 0.0 <= values["train"]["rho_fixed"] <= 1.0:
        raise ConfigError("train.rho_fixed must lie in [0, 1]")
    if not 0.0 <= values["indicator"]["noise_p"] <= 1.0:
        raise ConfigError("indicator.noise_p must lie in [0, 1]")
    cfg = RunConfig(values)
    try:
        cfg.seg_params()
        cfg.indicator_hyper(0)
        cfg.policy_config()
        cfg.train_config(0)
        cfg.env_config()
    except ArgumentError as e:
        raise ConfigError(str(e)) from None


def load_config(path=None, overrides: Iterable[str] = ()) -> RunConfig:
    """Read ``path`` (optional), apply overrides and validate."""
    raw: Dict[str, Dict[str, str]] = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        except configparser.Error as e:
            raise ConfigError(f"malformed config {path}: {e}") from None
        for section in parser.sections():
            if section not in DEFAULTS:
                raise ConfigError(f"unknown config section [{section}] in {path}")
            for key, value in parser.items(section):
                if key not in DEFAULTS[section]:
                    raise ConfigError(f"unknown config key {section}.{key} in {path}")
                raw.setdefault(section, {})[key] = value
    for item in overrides:
        section, key, value = parse_override(item)
        raw.setdefault(section, {})[key] = value
    cfg = RunConfig(_resolve(raw))
    logger.debug("resolved config %s", cfg.hash[:12])
    return cfg


def with_value(cfg: RunConfig, section: str, key: str, value) -> RunConfig:
    return cfg.with_overrides([f"{section}.{key}={unparse(value)}"])


def replace_out_dir(cfg: RunConfig, out_dir) -> RunConfig:
    values = {s: dict(keys) for s, keys in cfg.values.items()}
    values["paths"]["out_dir"] = str(out_dir)
    return replace(cfg, values=values)
