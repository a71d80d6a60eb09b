"""
Shared package for the momentsdp toolkit.
This package contains common configuration, types and utilities used across the project.
"""

__version__ = '0.1.0'
