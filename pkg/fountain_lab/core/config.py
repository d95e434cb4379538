"""Configuration management for the fountain code lab.

This module defines all application settings and provides validation
for the numeric knobs that change experiment results.
"""

import os

from pydantic_settings import BaseSettings


class SettingsValidationError(ValueError):
    """Raised when a configuration value is missing or invalid."""


LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
RSD_LOG_BASES = ("e", "2")


class Settings(BaseSettings):
    """Application settings loaded from environment variables.

    All settings can be overridden via environment variables or .env file.
    """

    # Logging Configuration
    LOG_LEVEL: str = "INFO"
    SHOW_PROGRESS: bool = False

    # Execution Configuration
    FOUNTAIN_WORKERS: int = 1
    COMMAND_TIMEOUT: int = 3600

    # Monte Carlo stop rule (200 failures or 1e5 trials)
    MC_TARGET_FAILURES: int = 200
    MC_MAX_TRIALS: int = 100000
    MC_BATCH_SIZE: int = 256

    # Finite-length DP
    DP_PRUNE_ENABLED: bool = True
    DP_PRUNE_THRESHOLD: float = 1e-15
    DP_VERIFY_MAX_K: int = 2000

    # Degree distributions and code construction
    RSD_LOG_BASE: str = "e"
    SYSTEMATIC_RETRY_BUDGET: int = 32

    # Simulated annealing designer
    SA_MASS_QUANTUM: float = 0.005
    SA_COOLING: float = 0.97
    SA_SWEEPS: int = 300
    SA_MOVES_PER_SWEEP: int = 20
    SA_INITIAL_ACCEPTANCE: float = 0.8
    SA_PENALTY_LT: float = 1000.0
    SA_PENALTY_RAPTOR: float = 10000.0

    # Config files
    CONFIG_VERSION: int = 1

    class Config:
        """Pydantic configuration."""
        env_file = os.path.join(os.path.dirname(__file__), "..", "..", ".env")
        case_sensitive = True
        extra = "allow"


settings = Settings()


def validate_runtime_settings(current_settings: Settings) -> None:
    """Validate configuration values before any command runs.

    Args:
        current_settings: Settings instance to validate

    Raises:
        SettingsValidationError: If a setting is out of range
    """
    if current_settings.LOG_LEVEL not in LOG_LEVELS:
        raise SettingsValidationError(
            f"LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}"
        )

    if current_settings.RSD_LOG_BASE not in RSD_LOG_BASES:
        raise SettingsValidationError("RSD_LOG_BASE must be 'e' or '2'")

    positive_counts = {
        "FOUNTAIN_WORKERS": current_settings.FOUNTAIN_WORKERS,
        "COMMAND_TIMEOUT": current_settings.COMMAND_TIMEOUT,
        "MC_TARGET_FAILURES": current_settings.MC_TARGET_FAILURES,
        "MC_MAX_TRIALS": current_settings.MC_MAX_TRIALS,
        "MC_BATCH_SIZE": current_settings.MC_BATCH_SIZE,
        "DP_VERIFY_MAX_K": current_settings.DP_VERIFY_MAX_K,
        "SYSTEMATIC_RETRY_BUDGET": current_settings.SYSTEMATIC_RETRY_BUDGET,
        "SA_SWEEPS": current_settings.SA_SWEEPS,
        "SA_MOVES_PER_SWEEP": current_settings.SA_MOVES_PER_SWEEP,
    }
    invalid = [name for name, value in positive_counts.items() if value < 1]
    if invalid:
        raise SettingsValidationError(
            f"Settings must be at least 1: {', '.join(invalid)}"
        )

    if current_settings.DP_PRUNE_THRESHOLD < 0:
        raise SettingsValidationError("DP_PRUNE_THRESHOLD must be non-negative")

    if not 0 < current_settings.SA_COOLING < 1:
        raise SettingsValidationError("SA_COOLING must lie in (0, 1)")

    if not 0 < current_settings.SA_INITIAL_ACCEPTANCE < 1:
        raise SettingsValidationError("SA_INITIAL_ACCEPTANCE must lie in (0, 1)")

    if current_settings.SA_MASS_QUANTUM <= 0:
        raise SettingsValidationError("SA_MASS_QUANTUM must be greater than 0")
