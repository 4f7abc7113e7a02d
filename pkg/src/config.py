"""App settings, loaded from env vars / .env file."""

from pathlib import Path
from typing import Literal

from pydantic_settings import BaseSettings


class Settings(BaseSettings):

    # Logging
    log_level: str = "INFO"
    log_json: bool = False

    # Runtime
    default_executors: int = 1
    default_clock: Literal["simulated", "real-time"] = "simulated"

    # Experiments
    trial_workers: int = 1
    output_dir: str = "./results"

    # Derived
    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    model_config = {"env_file": ".env", "env_file_encoding": "utf-8", "env_prefix": "DETSOA_"}


# Singleton
settings = Settings()
