from __future__ import annotations

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    log_level: str = "INFO"
    default_jobs: int = Field(default=1, ge=1)
    output_dir: str = "."

    model_config = SettingsConfigDict(
        env_file=".env", env_prefix="DIVSEEK_", case_sensitive=False, extra="ignore",
    )


def get_settings() -> Settings:
    # Re-read on every call so tests and the CLI see the current environment.
    return Settings()
