"""Application configuration loaded from environment variables and config files."""

import tomllib
from pathlib import Path
from typing import Any

from pydantic_settings import BaseSettings, SettingsConfigDict

from .models import LoopConfig


class Settings(BaseSettings):
    """Ambient settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="DEEPQ_FUZZ_",
        extra="ignore",  # Ignore extra environment variables
    )

    # Logging
    log_level: str = "INFO"

    # Output
    out_dir: Path = Path("runs")

    # Execution
    max_workers: int = 1
    target_timeout: float = 1.0
    coverage_env_var: str = "DEEPQ_FUZZ_COVERAGE_FILE"

    # Timing calibration
    calibration_runs: int = 200
    calibration_threshold: float = 1e-2


settings = Settings()


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Recursively merge override values into a config mapping."""
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_loop_config(
    path: Path | None = None, overrides: dict[str, Any] | None = None
) -> LoopConfig:
    """Load a LoopConfig from a TOML file and apply flag overrides on top.

    Args:
        path: Optional TOML config file. Keys mirror LoopConfig fields, nested
              models are TOML tables (e.g. ``[reward]``, ``[network]``).
        overrides: Values that win over the file (None values are skipped).

    Returns:
        The validated, fully resolved LoopConfig.
    """
    data: dict[str, Any] = {}
    if path is not None:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    return LoopConfig.model_validate(_merge(data, overrides or {}))
