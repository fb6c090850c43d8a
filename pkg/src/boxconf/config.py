"""Run configuration: one flat JSON file, every key overridable by a CLI flag.

Precedence: built-in defaults < config file < command-line flags. Unknown
config keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import ConfigError


@dataclass
class RunConfig:
    # backend
    backend_url: Optional[str] = None
    model: Optional[str] = None
    api_key_env: str = "OPENAI_API_KEY"
    api: str = "completions"  # completions | chat (chat cannot score)
    capabilities: list[str] = field(default_factory=lambda: ["generate", "score"])
    mock_fixture: Optional[str] = None
    # sampling
    n: int = 16
    temperature: float = 1.0
    max_tokens: int = 1024
    seed: Optional[int] = None
    # methods
    reward: str = "confidence"
    strategy: str = "sc_reward"
    k: int = 10
    iteration: int = 1
    # paths / execution
    cache_dir: Optional[str] = None
    out_dir: str = "out"
    parallelism: int = 8

    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env)


_FIELDS = {f.name for f in fields(RunConfig)}


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = set(data) - _FIELDS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    return data


def build_config(
    config_path: Optional[str],
    overrides: dict,
    command_defaults: Optional[dict] = None,
) -> RunConfig:
    """Merge (lowest to highest precedence): dataclass defaults,
    per-command defaults, config file, non-None CLI overrides."""
    merged = dict(command_defaults or {})
    merged.update(load_config(config_path))
    for key, value in overrides.items():
        if value is not None:
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
    cfg = RunConfig(**merged)
    if cfg.api not in ("completions", "chat"):
        raise ConfigError(f"api must be 'completions' or 'chat', got {cfg.api!r}")
    if cfg.parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    return cfg
