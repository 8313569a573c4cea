"""Service configuration: YAML key-value file plus ANNOCHAIN_* env overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from .errors import ConfigError

ENV_PREFIX = "ANNOCHAIN_"

_GATEWAY_KINDS = ("mock", "http")
_MATCHER_MODES = ("exact", "embedding")


@dataclass(frozen=True)
class ApiConfig:
    host: str = "127.0.0.1"
    port: int = 8420
    data_dir: str = "./annochain-data"
    gateway: str = "mock"
    gateway_endpoint_env: str = "ANNOCHAIN_GATEWAY_ENDPOINT"
    gateway_model_env: str = "ANNOCHAIN_GATEWAY_MODEL"
    gateway_key_env: str = "ANNOCHAIN_GATEWAY_KEY"
    matcher_mode: str = "exact"
    matcher_threshold: float = 0.85
    max_rounds: int = 6
    bearer_token: str | None = None

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ConfigError("port", f"must be in [1, 65535], got {self.port}")
        if self.gateway not in _GATEWAY_KINDS:
            raise ConfigError("gateway", f"must be one of {_GATEWAY_KINDS}, got {self.gateway!r}")
        if self.matcher_mode not in _MATCHER_MODES:
            raise ConfigError("matcher_mode",
                              f"must be one of {_MATCHER_MODES}, got {self.matcher_mode!r}")
        if not 0.0 < self.matcher_threshold <= 1.0:
            raise ConfigError("matcher_threshold",
                              f"must be in (0, 1], got {self.matcher_threshold}")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds", f"must be >= 1, got {self.max_rounds}")


_FIELD_TYPES = {f.name: f.type for f in fields(ApiConfig)}


def _coerce(key: str, value) -> object:
    """Coerce a raw string/YAML scalar to the field's declared type."""
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "str | None":
            return None if value in (None, "", "null", "~") else str(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"cannot coerce {value!r}: {exc}") from exc


def load_config(path: str | os.PathLike | None = None,
                env: dict[str, str] | None = None) -> ApiConfig:
    """Build an ApiConfig from an optional YAML file and the environment.

    Env vars named ANNOCHAIN_<FIELD> (upper-cased field name) override file
    values. Unknown file keys or invalid values raise ConfigError naming the
    offending key.
    """
    env = os.environ if env is None else env
    values: dict[str, object] = {}
    if path is not None:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(raw, dict):
            raise ConfigError("<file>", "configuration file must be a key-value mapping")
        for key, value in raw.items():
            if key not in _FIELD_TYPES:
                raise ConfigError(key, "unknown configuration key")
            values[key] = _coerce(key, value)
    for name in _FIELD_TYPES:
        env_key = ENV_PREFIX + name.upper()
        if env_key in env:
            values[name] = _coerce(name, env[env_key])
    return ApiConfig(**values)
