"""
Logging set-up used by the command-line entry point.
"""

import logging
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(debug: bool = False, level: Optional[str] = None) -> None:
    """
    Configure root logging once per process.

    Args:
        debug: Force DEBUG level
        level: Level name used when debug is off (defaults to INFO)
    """
    if debug:
        resolved = logging.DEBUG
    else:
        resolved = getattr(logging, str(level or 'INFO').upper(), logging.INFO)
    logging.basicConfig(level=resolved, format=LOG_FORMAT)
    logging.getLogger().setLevel(resolved)
