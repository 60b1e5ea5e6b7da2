"""Pipeline configuration: defaults, config file, and OSIR_* env overrides.

Precedence (lowest to highest): built-in defaults, JSON config file,
environment variables, explicit CLI flags.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .backend import BackendConfig
from .grounding import Thresholds

ENV_PREFIX = "OSIR_"


@dataclass(frozen=True)
class PipelineConfig:
    token_budget: int = 25_000
    samples_per_article: int = 3
    threshold_identifier: float = 0.95
    threshold_citation: float = 0.90
    embellishment_mode: str = "fraction"
    pass1_mode: str = "mean"
    f1_floor: float = 0.5
    group_by: str = "discipline"
    seed: int = 0
    backend_mode: str = "replay"
    endpoint: str | None = None
    auth_token_env: str = "OSIR_TOKEN"
    fixture_path: str | None = None
    max_in_flight: int = 4
    timeout: float = 60.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    decode_params: dict = field(default_factory=dict)

    def thresholds(self) -> Thresholds:
        return Thresholds(identifier=self.threshold_identifier,
                          citation=self.threshold_citation)

    def backend(self) -> BackendConfig:
        return BackendConfig(
            mode=self.backend_mode,
            endpoint=self.endpoint,
            auth_token_env=self.auth_token_env,
            fixture_path=self.fixture_path,
            samples_per_article=self.samples_per_article,
            max_in_flight=self.max_in_flight,
            timeout=self.timeout,
            max_attempts=self.max_attempts,
            backoff_base=self.backoff_base,
            decode_params=self.decode_params,
        )

    def to_payload(self) -> dict:
        payload = {
            "token_budget": self.token_budget,
            "samples_per_article": self.samples_per_article,
            "threshold_identifier": self.threshold_identifier,
            "threshold_citation": self.threshold_citation,
            "embellishment_mode": self.embellishment_mode,
            "pass1_mode": self.pass1_mode,
            "f1_floor": self.f1_floor,
            "group_by": self.group_by,
            "seed": self.seed,
            "backend_mode": self.backend_mode,
            "endpoint": self.endpoint,
            "auth_token_env": self.auth_token_env,
            "fixture_path": self.fixture_path,
            "max_in_flight": self.max_in_flight,
            "timeout": self.timeout,
            "max_attempts": self.max_attempts,
            "backoff_base": self.backoff_base,
            "decode_params": self.decode_params,
        }
        return payload


_INT_KEYS = {"token_budget", "samples_per_article", "max_in_flight",
             "max_attempts", "seed"}
_FLOAT_KEYS = {"threshold_identifier", "threshold_citation", "f1_floor",
               "timeout", "backoff_base"}
_STR_KEYS = {"embellishment_mode", "pass1_mode", "group_by", "backend_mode",
             "endpoint", "auth_token_env", "fixture_path"}
_DICT_KEYS = {"decode_params"}

_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _DICT_KEYS


class ConfigError(ValueError):
    pass


def _coerce(key: str, value) -> object:
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _DICT_KEYS:
            if isinstance(value, str):
                value = json.loads(value)
            if not isinstance(value, dict):
                raise ValueError("expected an object")
            return value
        return None if value is None else str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc


def load_config(path: str | Path | None = None,
                env: dict[str, str] | None = None,
                **overrides) -> PipelineConfig:
    """Assemble the effective configuration.

    *path* points at a JSON object whose keys match PipelineConfig fields.
    Environment variables named OSIR_<FIELD> (e.g. OSIR_TOKEN_BUDGET)
    override the file; keyword overrides (CLI flags) win over everything.
    """
    values: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            payload = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {p}: invalid JSON ({exc.msg})") from exc
        if not isinstance(payload, dict):
            raise ConfigError(f"config file {p}: expected a JSON object")
        for key, value in payload.items():
            if key not in _ALL_KEYS:
                raise ConfigError(f"config file {p}: unknown key {key!r}")
            values[key] = _coerce(key, value)

    env_map = os.environ if env is None else env
    for key in _ALL_KEYS:
        env_name = ENV_PREFIX + key.upper()
        if env_name in env_map:
            values[key] = _coerce(key, env_map[env_name])

    for key, value in overrides.items():
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown config override {key!r}")
        if value is not None:
            values[key] = _coerce(key, value)

    return PipelineConfig(**values)
