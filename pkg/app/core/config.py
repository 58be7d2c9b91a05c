"""
Configuration settings for the solver and its command-line front-end.
"""

from functools import lru_cache
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(
        env_prefix="CSH_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application settings
    app_name: str = "CSH Graph Solver"
    app_description: str = "Maximal solutions and critical coupling of Chern-Simons-Higgs equations on finite graphs"
    app_version: str = "1.0.0"

    # Logging settings
    log_level: str = "info"
    log_format: str = "console"  # "console" or "json"

    # Monotone iteration settings
    solver_tol: float = 1e-8
    max_iter: int = 20000
    floor_scale: float = 1e6
    stall_window: int = 25

    # Linear algebra settings
    linear_tol: float = 1e-13
    poisson_tol: float = 1e-12
    dense_threshold: int = 200
    cg_max_iter: int = 20000

    # Critical coupling search
    lambda_tol: float = 1e-3
    critical_cap_factor: float = 1e6
    critical_halvings: int = 6
    critical_tol: float = 1e-6
    critical_refinements: int = 40
    critical_patience: int = 4
    retry_factor: int = 10

    # Sweep worker pool (None -> available parallelism)
    workers: Optional[int] = None


@lru_cache()
def get_settings() -> Settings:
    """Get cached application settings."""
    return Settings()
