"""Configuration management."""

from functools import lru_cache

from pydantic_settings import BaseSettings

from common.constants import (
    DEFAULT_CAUCHY_DECAY,
    DEFAULT_CAUCHY_MAX_STEPS,
    DEFAULT_CAUCHY_TOL,
    DEFAULT_CAUCHY_WINDOW,
    DEFAULT_CLASS_SUP_THRESHOLD,
    DEFAULT_CONTINUITY_CAP,
    DEFAULT_CONTINUITY_SAMPLES,
    DEFAULT_INFINITY_MEASURE_CELLS,
    DEFAULT_MAX_CONCURRENCY,
    DEFAULT_PHYSICAL_DECAY_ORDER,
    DEFAULT_REPORT_PATH,
    DEFAULT_SAMPLES,
    DEFAULT_SCHEDULE_ALT_BASE,
    DEFAULT_SCHEDULE_BASE,
    DEFAULT_SEMINORM_TOL,
)


class Settings(BaseSettings):
    """Engine settings, overridable through QCSTAR_* environment variables."""

    # Logging
    log: str = "WARNING"
    log_json: bool = True

    # Tolerances
    seminorm_tol: float = DEFAULT_SEMINORM_TOL
    cauchy_tol: float = DEFAULT_CAUCHY_TOL
    infinity_measure_cells: int = DEFAULT_INFINITY_MEASURE_CELLS

    # Schedules
    schedule_base: float = DEFAULT_SCHEDULE_BASE
    schedule_alt_base: float = DEFAULT_SCHEDULE_ALT_BASE
    cauchy_decay: float = DEFAULT_CAUCHY_DECAY
    cauchy_window: int = DEFAULT_CAUCHY_WINDOW
    cauchy_max_steps: int = DEFAULT_CAUCHY_MAX_STEPS

    # Sampling
    samples: int = DEFAULT_SAMPLES
    continuity_samples: int = DEFAULT_CONTINUITY_SAMPLES
    continuity_cap: float = DEFAULT_CONTINUITY_CAP

    # Calculus
    class_sup_threshold: float = DEFAULT_CLASS_SUP_THRESHOLD
    physical_decay_order: int = DEFAULT_PHYSICAL_DECAY_ORDER

    # Runner
    report_path: str = DEFAULT_REPORT_PATH
    report_format: str = "json"
    max_concurrency: int = DEFAULT_MAX_CONCURRENCY

    class Config:
        env_prefix = "QCSTAR_"
        env_file = ".env"
        env_file_encoding = "utf-8"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
