"""
Base configuration module for the momentsdp toolkit.
This module provides a centralized configuration system using environment variables.
"""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from .env import DEFAULTS, get_env_var


class Settings(BaseSettings):
    """Settings shared by the library services and the command-line front end."""

    # Project paths
    PROJECT_ROOT: Path = Path(__file__).parent.parent.parent
    SHARED_DIR: Path = PROJECT_ROOT / 'shared'
    DATA_DIR: Path = PROJECT_ROOT / 'momentsdp' / 'data'

    # Environment settings
    ENV: str = Field(default_factory=lambda: get_env_var('MOMENTSDP_ENV', DEFAULTS['MOMENTSDP_ENV']))
    DEBUG: bool = Field(default_factory=lambda: get_env_var('MOMENTSDP_DEBUG', DEFAULTS['MOMENTSDP_DEBUG']))
    LOG_LEVEL: str = Field(default_factory=lambda: get_env_var('MOMENTSDP_LOG_LEVEL', DEFAULTS['MOMENTSDP_LOG_LEVEL']))
    THREADS: int = Field(default_factory=lambda: get_env_var('MOMENTSDP_THREADS', DEFAULTS['MOMENTSDP_THREADS']), ge=1)

    # Solver settings
    SOLVER_TOLERANCE: float = Field(default_factory=lambda: get_env_var('MOMENTSDP_SOLVER_TOLERANCE', DEFAULTS['MOMENTSDP_SOLVER_TOLERANCE']), gt=0)
    SOLVER_MAX_ITERATIONS: int = Field(default_factory=lambda: get_env_var('MOMENTSDP_SOLVER_MAX_ITERATIONS', DEFAULTS['MOMENTSDP_SOLVER_MAX_ITERATIONS']), ge=1)
    SOLVER_BACKEND: str = Field(default_factory=lambda: get_env_var('MOMENTSDP_SOLVER_BACKEND', DEFAULTS['MOMENTSDP_SOLVER_BACKEND']))

    # Relaxation settings
    RELAXATION_ORDER: int = Field(default_factory=lambda: get_env_var('MOMENTSDP_RELAXATION_ORDER', DEFAULTS['MOMENTSDP_RELAXATION_ORDER']), ge=1)
    HORIZON_STEPS: int = Field(default_factory=lambda: get_env_var('MOMENTSDP_HORIZON_STEPS', DEFAULTS['MOMENTSDP_HORIZON_STEPS']), ge=1)
    LSQ_REGULARIZATION: float = Field(default_factory=lambda: get_env_var('MOMENTSDP_LSQ_REGULARIZATION', DEFAULTS['MOMENTSDP_LSQ_REGULARIZATION']), ge=0)

    # Simulation settings
    SIM_DT: float = Field(default_factory=lambda: get_env_var('MOMENTSDP_SIM_DT', DEFAULTS['MOMENTSDP_SIM_DT']), gt=0)
    SIM_PATHS: int = Field(default_factory=lambda: get_env_var('MOMENTSDP_SIM_PATHS', DEFAULTS['MOMENTSDP_SIM_PATHS']), ge=1)
    SIM_SEED: int = Field(default_factory=lambda: get_env_var('MOMENTSDP_SIM_SEED', DEFAULTS['MOMENTSDP_SIM_SEED']))
    SIM_CHUNK_SIZE: int = Field(default_factory=lambda: get_env_var('MOMENTSDP_SIM_CHUNK_SIZE', DEFAULTS['MOMENTSDP_SIM_CHUNK_SIZE']), ge=1)

    # Output settings
    OUTPUT_DIR: Path = Field(default_factory=lambda: Path(str(get_env_var('MOMENTSDP_OUTPUT_DIR', DEFAULTS['MOMENTSDP_OUTPUT_DIR']))))

    model_config = SettingsConfigDict(
        env_file='.env',
        env_file_encoding='utf-8',
        case_sensitive=True,
        extra='ignore'
    )


# Create a singleton instance
config = Settings()

__all__ = ['Settings', 'config']
