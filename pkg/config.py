"""
config.py - Centralised configuration for memattr.
All settings are loaded from MEMATTR_* environment variables / .env file.
Every value here is only a default; interceptors and the CLI can override it.

Settings are built on first use, not at import, so a bad MEMATTR_* value
surfaces as a pydantic ValidationError from get_settings() where the caller
can report it.
"""

from functools import lru_cache
from typing import Literal, Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class Settings(BaseSettings):
    # --- App ---
    app_name: str = "memattr"
    app_version: str = "1.0.0"

    # --- Interceptor defaults ---
    enabled: bool = False  # MEMATTR_ENABLED=0/1
    sampling: int = Field(default=1, ge=1)  # MEMATTR_SAMPLING, track every Nth event

    # --- Snapshots & budgets ---
    snapshot_dir: str = "snapshots"
    budgets_file: Optional[str] = None

    # --- CLI ---
    log_level: LogLevel = "WARNING"

    model_config = SettingsConfigDict(
        env_prefix="MEMATTR_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    @field_validator("log_level", mode="before")
    @classmethod
    def upper_log_level(cls, v):
        return v.upper() if isinstance(v, str) else v


@lru_cache
def get_settings() -> Settings:
    return Settings()
