from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache
from typing import Optional
import logging
import os


class Settings(BaseSettings):
    threads: int = 0  # 0 = machine parallelism
    output_dir: str = "results"
    log_level: str = "INFO"
    oracle_fixture: str = "tests/fixtures/oracle_values.csv"
    max_oracle_trials: float = 1e5

    model_config = SettingsConfigDict(
        env_prefix="RARE_MCMC_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


@lru_cache
def get_settings() -> Settings:
    return Settings()


def resolve_threads(requested: Optional[int] = None) -> int:
    """Worker count: explicit request, then RARE_MCMC_THREADS, then cpu count."""
    if requested is not None and requested > 0:
        return requested
    configured = get_settings().threads
    if configured > 0:
        return configured
    return os.cpu_count() or 1


def configure_logging(level: Optional[str] = None) -> None:
    level_name = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
