"""
Application Settings
===================

Main application settings and environment configuration using Pydantic Settings.
Supports development, testing, and production environments; every field can be
overridden with an ``EVLENS_`` prefixed environment variable (``EVLENS_SEED``,
``EVLENS_THREADS``, ...).
"""

from typing import Optional
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Main application settings with environment variable support."""

    # Application Configuration
    app_name: str = Field(default="evidence-lens", description="Application name")
    app_version: str = Field(default="1.0.0", description="Application version")
    environment: str = Field(
        default="development", description="Environment: development, testing, production"
    )
    log_level: str = Field(default="INFO", description="Logging level")

    # Execution Configuration
    seed: int = Field(default=0, ge=0, description="Base seed for every random stream")
    threads: int = Field(default=1, ge=1, description="Worker count for window-parallel methods")

    # Paths
    data_dir: Optional[Path] = Field(default=None, description="Directory holding MNIST IDX files")
    output_dir: Path = Field(default=Path("./out"), description="Default artifact directory")
    log_dir: Optional[Path] = Field(
        default=None, description="Rotating log file directory; no log file when unset"
    )

    # Explanation defaults (MNIST-style)
    window_size: int = Field(default=4, ge=1, description="Inner window side k")
    outer_size: int = Field(default=8, ge=2, description="Outer patch side l")
    samples: int = Field(default=10, ge=1, description="Samples per window S")
    batch_size: int = Field(default=160, ge=1, description="Forward batch size m")
    eps: float = Field(default=1e-6, gt=0.0, lt=0.5, description="Probability clamp in log-odds")
    ridge_scale: float = Field(
        default=1e-4, gt=0.0, description="Ridge as a fraction of the mean covariance diagonal"
    )

    # MNIST architecture (conv-pool-conv-pool-dense-dense)
    conv1_filters: int = Field(default=32, ge=1, description="Filters in the first conv layer")
    conv2_filters: int = Field(default=64, ge=1, description="Filters in the second conv layer")
    kernel_size: int = Field(default=5, ge=1, description="Conv kernel side")
    dense_units: int = Field(default=128, ge=1, description="Hidden dense width")

    # Training defaults
    epochs: int = Field(default=3, ge=1, description="Training epochs")
    learning_rate: float = Field(default=0.05, ge=0.0, description="SGD learning rate")
    train_batch_size: int = Field(default=32, ge=1, description="Training minibatch size")

    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        """Validate environment value."""
        allowed = {"development", "testing", "production"}
        if v not in allowed:
            raise ValueError(f"Environment must be one of: {allowed}")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        allowed = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if v.upper() not in allowed:
            raise ValueError(f"Log level must be one of: {allowed}")
        return v.upper()

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=False, env_prefix="EVLENS_"
    )


# Global settings instance - will be initialized when needed
settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get the global settings instance."""
    global settings
    if settings is None:
        settings = Settings()
    return settings


def reload_settings() -> Settings:
    """Reload settings from environment."""
    global settings
    settings = Settings()
    return settings
