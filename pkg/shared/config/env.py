"""
Environment variable handling for the momentsdp toolkit.
This module provides functions to load and validate environment variables.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

logger = logging.getLogger(__name__)


def load_env_file(env_file: Optional[Union[str, Path]] = None) -> None:
    """
    Load environment variables from a .env file.

    Args:
        env_file: Path to the .env file. If None, looks for .env in project root.
    """
    from dotenv import load_dotenv

    if env_file is None:
        # Look for .env in project root
        project_root = Path(__file__).parent.parent.parent
        env_file = project_root / '.env'
    env_file = Path(env_file)

    if env_file.exists():
        load_dotenv(env_file)
    else:
        logger.debug(f"{env_file} not found. Using system environment variables.")


def get_env_var(key: str, default: Any = None) -> Any:
    """
    Get an environment variable with type conversion.

    Integers are tried before booleans so that numeric settings such as
    ``MOMENTSDP_THREADS=1`` keep their value.

    Args:
        key: Environment variable name
        default: Default value if not found

    Returns:
        The environment variable value, converted to appropriate type
    """
    value = os.getenv(key, default)

    if value is None:
        return None

    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            pass
        try:
            return float(value)
        except ValueError:
            pass
        if value.lower() in ('true', 'yes', 'on'):
            return True
        if value.lower() in ('false', 'no', 'off'):
            return False
        return value

    return value


def validate_required_vars(required_vars: Dict[str, Any]) -> None:
    """
    Validate that required environment variables are set.

    Args:
        required_vars: Dictionary of variable names and their default values

    Raises:
        ValueError: If any required variable is not set
    """
    missing = [var for var, default in required_vars.items() if get_env_var(var, default) is None]

    if missing:
        raise ValueError(f"Missing required environment variables: {', '.join(missing)}")


# Environment variables with their defaults
DEFAULTS = {
    'MOMENTSDP_ENV': 'development',
    'MOMENTSDP_DEBUG': 'false',
    'MOMENTSDP_LOG_LEVEL': 'INFO',
    'MOMENTSDP_THREADS': '1',
    'MOMENTSDP_SOLVER_TOLERANCE': '1e-8',
    'MOMENTSDP_SOLVER_MAX_ITERATIONS': '200',
    'MOMENTSDP_SOLVER_BACKEND': 'embedded',
    'MOMENTSDP_RELAXATION_ORDER': '2',
    'MOMENTSDP_HORIZON_STEPS': '200',
    'MOMENTSDP_SIM_DT': '0.01',
    'MOMENTSDP_SIM_PATHS': '5000',
    'MOMENTSDP_SIM_SEED': '0',
    'MOMENTSDP_SIM_CHUNK_SIZE': '500',
    'MOMENTSDP_LSQ_REGULARIZATION': '1e-10',
    'MOMENTSDP_OUTPUT_DIR': 'out',
}

# Load environment variables when module is imported
load_env_file()

try:
    validate_required_vars(DEFAULTS)
except ValueError as e:
    logger.warning(f"{e}")
