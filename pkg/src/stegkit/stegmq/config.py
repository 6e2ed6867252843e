"""Broker configuration: line-oriented `key = value` files."""

from __future__ import annotations

import os
from dataclasses import dataclass, field


class ConfigError(Exception):
    pass


@dataclass
class BrokerConfig:
    socket_path: str
    scheme: str
    persistence_dir: str
    key_file: str
    max_queue_depth: int = 1024
    counter_start: int = 0
    block_bits: int = 128          # iv scheme
    channel_file: str | None = None  # universal scheme
    channel_seed: int = 0
    rho: int = 1                   # universal scheme repetition factor
    curve: str | None = None       # ec scheme: shipped curve name
    curve_file: str | None = None  # ec scheme: parameter file
    r: int = 8                     # ec scheme payload bits per point
    fsync: bool = False
    extras: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if self.scheme not in ("iv", "universal", "ec"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.max_queue_depth < 1:
            raise ConfigError("max_queue_depth must be >= 1")
        if not os.path.exists(self.key_file):
            raise ConfigError(f"key file {self.key_file} does not exist")
        if self.scheme == "universal":
            if not self.channel_file or not os.path.exists(self.channel_file):
                raise ConfigError("universal scheme requires an existing channel_file")
            if self.rho < 1 or self.rho % 2 == 0:
                raise ConfigError("rho must be odd and >= 1")
        if self.scheme == "ec":
            if not self.curve and not self.curve_file:
                raise ConfigError("ec scheme requires curve or curve_file")
            if self.curve_file and not os.path.exists(self.curve_file):
                raise ConfigError(f"curve file {self.curve_file} does not exist")
            if not 2 <= self.r <= 15:
                raise ConfigError("r must be between 2 and 15")


_INT_KEYS = {"max_queue_depth", "counter_start", "block_bits", "channel_seed", "rho", "r"}
_BOOL_KEYS = {"fsync"}
_STR_KEYS = {
    "socket_path",
    "scheme",
    "persistence_dir",
    "key_file",
    "channel_file",
    "curve",
    "curve_file",
}


def parse_config(text: str) -> BrokerConfig:
    values: dict[str, object] = {}
    extras: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in _INT_KEYS:
            values[key] = int(val)
        elif key in _BOOL_KEYS:
            values[key] = val.lower() in ("1", "true", "on", "yes")
        elif key in _STR_KEYS:
            values[key] = val
        else:
            extras[key] = val
    for required in ("socket_path", "scheme", "persistence_dir", "key_file"):
        if required not in values:
            raise ConfigError(f"missing required key {required}")
    cfg = BrokerConfig(extras=extras, **values)  # type: ignore[arg-type]
    cfg.validate()
    return cfg


def load_config(path: str) -> BrokerConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
