"""
Logging - Console logging setup for the command line
"""

import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level="INFO", stream=None):
    """
    Install a single stream handler on the root logger

    Args:
        level (str): Level name such as 'INFO' or 'DEBUG'
        stream: Output stream (stderr by default)

    Returns:
        logging.Logger: The configured root logger
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    return root
