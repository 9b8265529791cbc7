"""
Centralized settings management.

Settings come from two sources:
1. Environment variables (or a .env file) for per-invocation overrides
2. config/settings.yaml for static settings shared by every run

Scenario files are separate; see llnroute.scenario.

The settings are loaded once when the module is imported,
and any errors will halt the application with a clear message.
"""

from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Base directory for resolving relative paths (project root, not config dir)
BASE_DIR = Path(__file__).resolve().parent.parent


# --- YAML Configuration (Static Settings) ---


class LoggingConfig(BaseModel):
    """Logging defaults."""

    level: str = Field("INFO", description="Root log level name")
    format: str = Field(
        "%(asctime)s %(levelname)s %(name)s: %(message)s",
        description="logging.Formatter format string",
    )
    filename: str = Field("", description="Log file; empty means stderr")


class ReferenceConfig(BaseModel):
    """Published comparator values, printed as static reference lines."""

    rpl_delay_ms: float = Field(94.0, description="RPL end-to-end delay")
    rpl_pdr: float = Field(1.0, description="RPL packet delivery ratio")
    loadng_mp2p_delay_ms: float = 286.0
    aodv_mp2p_delay_ms: float = 1680.0
    loadng_mp2p_pdr_nodes: float = 0.75
    aodv_mp2p_pdr_nodes: float = 0.55


class AcceptanceConfig(BaseModel):
    """Thresholds for the acceptance checklist."""

    pdr_gap_at_75_nodes: float = Field(0.05, ge=0.0, le=1.0)
    overhead_ratio_max: float = Field(0.9, gt=0.0)
    p2mp_pdr_min: float = Field(0.95, ge=0.0, le=1.0)
    radio_check_tolerance: float = Field(0.02, gt=0.0)
    sweep_duration_s: float = Field(900, gt=0.0)
    sweep_seeds: int = Field(10, ge=1)


class YamlSettings(BaseModel):
    """Container for all YAML-based configuration."""

    logging: LoggingConfig = LoggingConfig()
    reference: ReferenceConfig = ReferenceConfig()
    acceptance: AcceptanceConfig = AcceptanceConfig()


def load_yaml_config() -> YamlSettings:
    """
    Load static settings from YAML file.

    Returns:
        YamlSettings: Validated configuration object

    Raises:
        FileNotFoundError: If the settings file doesn't exist
        ValidationError: If the settings file is invalid
    """
    yaml_file = BASE_DIR / "config" / "settings.yaml"

    if not yaml_file.exists():
        raise FileNotFoundError(
            f"Settings file not found at: {yaml_file}\n"
            f"Please ensure config/settings.yaml exists in the project root."
        )

    with open(yaml_file) as f:
        config_data: dict[str, Any] = yaml.safe_load(f) or {}

    return YamlSettings(**config_data)


# --- Environment Configuration (Overrides) ---


class EnvSettings(BaseSettings):
    """
    Environment-based overrides.

    Values are loaded from .env file or environment variables.
    """

    seed: int | None = Field(
        None,
        alias="LLNROUTE_SEED",
        description="Replaces the scenario seed list with this single seed",
    )
    log_level: str | None = Field(
        None,
        alias="LLNROUTE_LOG_LEVEL",
        description="Overrides logging.level from settings.yaml",
    )
    jobs: int | None = Field(
        None,
        alias="LLNROUTE_JOBS",
        ge=1,
        description="Default --jobs bound for sweeps",
    )

    model_config = SettingsConfigDict(
        env_file=BASE_DIR / ".env",
        env_file_encoding="utf-8",
        extra="ignore",  # Ignore extra env vars
        case_sensitive=False,
    )


# --- Combined Settings (Single Source of Truth) ---


class Settings(BaseModel):
    """
    The single source of truth for process-wide settings.

    Combines environment overrides and YAML-based configuration
    into a single, type-safe object.
    """

    env: EnvSettings
    yaml: YamlSettings


def load_settings() -> Settings:
    """Build a fresh Settings object (re-reads the environment)."""
    return Settings(env=EnvSettings(), yaml=load_yaml_config())


# Load settings once when the module is imported
# Any errors will halt the application with a helpful message
try:
    settings = load_settings()
except Exception as e:
    print("\n" + "=" * 70)
    print("FATAL ERROR: Could not load settings")
    print("=" * 70)
    print("\nPlease check:")
    print("  1. config/settings.yaml exists and is valid")
    print("  2. LLNROUTE_* environment variables hold valid values")
    print("\nError details:")
    print(f"  {type(e).__name__}: {e}")
    print("=" * 70 + "\n")
    raise

__all__ = ["BASE_DIR", "Settings", "load_settings", "settings"]
