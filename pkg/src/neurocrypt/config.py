"""Experiment configuration: an INI file of record plus command-line overrides.

Example::

    [cipher]
    name = des
    rounds = 1
    key = 133457799BBCDFF1

    [dataset]
    train_count = 2^16
    test_count = 2^16
    seed = 1
    format = binary

    [suite]
    architectures = fat_shallow, deep_thin, cascade
    activation = sigmoid
    seed = 0

    [train]
    max_epochs = 350
    batch_size = 1000
    shuffle_seed = 0
    patience_epochs = 10
    min_rel_improvement = 1e-4
    eval_every = 1
    optimizer = adam

    [eval]
    m1_start = 12
    m2 = 16
    max_comp_data = 20
    grow = false

    [output]
    dir = runs/des1

Counts accept plain integers or ``2^k``. A run manifest (JSON with a
``config`` object holding the same sections) is accepted wherever a config
file is.
"""
from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from neurocrypt.ciphers import make_oracle
from neurocrypt.ciphers.base import CipherOracle, ConfigurationError
from neurocrypt.mimicnet import ARCH_KINDS, ArchitectureSpec
from neurocrypt.trainer import TrainConfig

OUTPUT_ENV = "NEUROCRYPT_OUT"

SECTIONS = ("cipher", "dataset", "suite", "train", "eval", "output")

DEFAULTS: dict[str, dict[str, str]] = {
    "cipher": {"name": "des", "rounds": "1", "key": "133457799BBCDFF1", "mode": "filter"},
    "dataset": {"train_count": "2^16", "test_count": "2^16", "seed": "1", "format": "binary"},
    "suite": {"architectures": ",".join(ARCH_KINDS), "activation": "sigmoid", "seed": "0"},
    "train": {
        "max_epochs": "350", "batch_size": "1000", "shuffle_seed": "0", "patience_epochs": "10",
        "min_rel_improvement": "1e-4", "eval_every": "1", "optimizer": "adam",
    },
    "eval": {"m1_start": "12", "m2": "16", "max_comp_data": "20", "grow": "false", "improve_tol": "1e-4"},
    "output": {"dir": "runs"},
}


def parse_count(text: str | int) -> int:
    if isinstance(text, int):
        return text
    text = str(text).strip().replace("**", "^")
    try:
        if "^" in text:
            base, exp = text.split("^", 1)
            return int(base) ** int(exp)
        return int(text)
    except ValueError as exc:
        raise ConfigurationError(f"not a count: {text!r}") from exc


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off", ""):
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


@dataclass
class ExperimentConfig:
    sections: dict[str, dict[str, str]] = field(default_factory=dict)
    source: str | None = None

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ExperimentConfig":
        sections = {name: dict(values) for name, values in DEFAULTS.items()}
        source = None
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise ConfigurationError(f"config file not found: {path}")
            source = str(path)
            if path.suffix == ".json":
                try:
                    loaded = json.loads(path.read_text())["config"]
                except (ValueError, KeyError) as exc:
                    raise ConfigurationError(f"{path}: not a run manifest: {exc}") from exc
                for name, values in loaded.items():
                    sections.setdefault(name, {}).update({k: str(v) for k, v in values.items()})
            else:
                parser = configparser.ConfigParser()
                try:
                    parser.read(path)
                except configparser.Error as exc:
                    raise ConfigurationError(f"{path}: {exc}") from exc
                for name in parser.sections():
                    if name not in SECTIONS:
                        raise ConfigurationError(f"{path}: unknown section [{name}]")
                    sections[name].update(parser[name])
        return cls(sections, source)

    def get(self, section: str, key: str, default: str | None = None) -> str | None:
        return self.sections.get(section, {}).get(key, default)

    def set(self, section: str, key: str, value) -> None:
        if value is not None:
            self.sections.setdefault(section, {})[key] = str(value)

    def to_dict(self) -> dict:
        return {k: dict(v) for k, v in self.sections.items()}

    # -- typed views -----------------------------------------------------

    def oracle(self) -> CipherOracle:
        params = dict(self.sections["cipher"])
        name = params.pop("name")
        if name != "des":
            params.pop("rounds", None)
            params.pop("key", None)
        if name != "hitag2":
            params.pop("mode", None)
        return make_oracle(name, **params)

    def train_config(self) -> TrainConfig:
        t = self.sections["train"]
        try:
            lr = t.get("learning_rate")
            return TrainConfig(
                max_epochs=int(t["max_epochs"]),
                batch_size=int(t["batch_size"]),
                shuffle_seed=int(t["shuffle_seed"]),
                patience_epochs=int(t["patience_epochs"]),
                min_rel_improvement=float(t["min_rel_improvement"]),
                eval_every=int(t["eval_every"]),
                optimizer=t.get("optimizer", "adam"),
                learning_rate=float(lr) if lr not in (None, "") else None,
                signed_features=_parse_bool(t.get("signed_features", "false")),
            )
        except (KeyError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"[train]: {exc}") from exc

    def architectures(self) -> list[str]:
        names = [a.strip() for a in self.sections["suite"]["architectures"].split(",") if a.strip()]
        for a in names:
            if a not in ARCH_KINDS:
                raise ConfigurationError(f"unknown architecture {a!r}; expected one of {ARCH_KINDS}")
        if not names:
            raise ConfigurationError("[suite] architectures is empty")
        return names

    def suite(self, oracle: CipherOracle) -> list[ArchitectureSpec]:
        act = self.sections["suite"].get("activation", "sigmoid")
        return [ArchitectureSpec.preset(k, oracle.input_bits, oracle.output_bits, act) for k in self.architectures()]

    def output_dir(self, flag: str | None = None) -> Path:
        """Flag, then ``$NEUROCRYPT_OUT``, then ``[output] dir``."""
        return Path(flag or os.environ.get(OUTPUT_ENV) or self.sections["output"]["dir"])

    def int(self, section: str, key: str) -> int:
        try:
            return int(self.sections[section][key])
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"[{section}] {key}: {exc}") from exc

    def count(self, section: str, key: str) -> int:
        value = self.get(section, key)
        if value is None:
            raise ConfigurationError(f"[{section}] {key} is required")
        return parse_count(value)

    def flag(self, section: str, key: str) -> bool:
        return _parse_bool(self.get(section, key, "false"))
