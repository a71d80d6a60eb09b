"""
Configuration package for the momentsdp toolkit.
"""

from .config import Settings, config
from .env import DEFAULTS, get_env_var, load_env_file, validate_required_vars

__all__ = [
    'Settings',
    'config',
    'load_env_file',
    'get_env_var',
    'validate_required_vars',
    'DEFAULTS'
]
