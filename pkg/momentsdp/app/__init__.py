"""
Command-line application.
"""

from .cli import RunConfig, main

__all__ = ['RunConfig', 'main']
