"""
Runtime settings from environment variables.

Experiment definitions live in configuration files (see icbandit.schemas.experiment);
this module only carries process-wide defaults: logging, thread count, run mode,
output location and the sizes of the verification batteries.
"""

import os
import sys
from typing import Literal, Optional

from dotenv import load_dotenv
from pydantic import ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Determine environment and load appropriate .env file
env = os.getenv("ENVIRONMENT", "development")

env_file_map = {
    "production": ".env.production",
    "test": ".env.test",
    "development": ".env.local",
}

env_file = env_file_map.get(env, ".env")

if os.path.exists(env_file):
    load_dotenv(env_file)
else:
    load_dotenv(".env", override=False)


class Settings(BaseSettings):
    """Process-wide settings loaded from ICBANDIT_* environment variables."""

    environment: str = "development"

    # Logging
    log_level: str = "INFO"
    log_format: Literal["json", "text"] = "json"

    # Harness defaults (CLI flags override)
    default_threads: int = 1
    default_mode: Literal["strict", "scan"] = "strict"
    output_dir: str = "./results"

    # Numerics
    simplex_tolerance: float = 1e-9
    max_enumeration_experts: int = 64

    # Verification battery sizes for the quick `verify` run; --full uses the
    # acceptance sizes in icbandit.services.verification.FULL_BUDGET
    verify_cases: int = 500
    verify_steps: int = 2000
    verify_seeds: int = 3

    model_config = SettingsConfigDict(
        env_prefix="ICBANDIT_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level name."""
        level = v.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level: {v}")
        return level

    @field_validator("default_threads", "verify_cases", "verify_steps", "verify_seeds")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        """Validate positive counts."""
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @property
    def is_json_logging(self) -> bool:
        """Check if JSON log records are enabled."""
        return self.log_format == "json"


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get or create settings instance."""
    global _settings
    if _settings is None:
        try:
            _settings = Settings()
        except ValidationError as e:
            invalid = [
                "ICBANDIT_" + str(error.get("loc", ["unknown"])[-1]).upper()
                for error in e.errors()
            ]
            print(
                f"Invalid environment configuration: {', '.join(invalid)}\n"
                f"Check {env_file_map.get(os.getenv('ENVIRONMENT', 'development'), '.env')} "
                f"or the process environment. See docs/configuration.md.",
                file=sys.stderr,
            )
            raise
    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next get_settings() re-reads the environment."""
    global _settings
    _settings = None
