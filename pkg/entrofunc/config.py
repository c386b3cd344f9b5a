"""
Typed configuration management using Pydantic Settings.

All knobs are read from ``ENTROFUNC_*`` environment variables (or a ``.env``
file) each time ``get_settings()`` is called.
"""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings with type validation and environment variable support."""

    # Overrides the seed of any experiment config when set
    SEED: int | None = None

    # Worker cap for replication runs; None means machine parallelism
    THREADS: int | None = Field(default=None, ge=1)

    LOG_LEVEL: str = "WARNING"

    # Neighbor index
    GRID_MAX_DIM: int = Field(default=8, ge=1)
    PAIR_CHUNK: int = Field(default=2_000_000, ge=1024)

    # Oracles
    BRUTE_FORCE_LIMIT: int = Field(default=1_000_000, ge=1)
    QUADRATURE_POINTS: int = Field(default=20_001, ge=5)
    QUADRATURE_POINTS_2D: int = Field(default=1_201, ge=5)

    model_config = SettingsConfigDict(
        env_prefix="ENTROFUNC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


def get_settings() -> Settings:
    """Get a settings instance reflecting the current environment."""
    return Settings()
