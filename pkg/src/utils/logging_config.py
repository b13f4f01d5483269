"""Logging configuration"""

import logging
import sys
from src.config import LOG_FORMAT, LOG_LEVEL, LOG_FILE

_HANDLER_TAG = '_lq_separation'


def setup_logging(level: str = LOG_LEVEL, log_file: str = LOG_FILE):
    """Configure logging with both file and console output

    Repeated calls (one per CLI invocation in a process) reuse the handlers
    installed by the first call and only reset the level.
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    if any(getattr(h, _HANDLER_TAG, False) for h in root_logger.handlers):
        return root_logger

    log_format = logging.Formatter(LOG_FORMAT)

    # Console handler
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(log_format)
    setattr(console_handler, _HANDLER_TAG, True)
    root_logger.addHandler(console_handler)

    # File handler
    try:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(log_format)
        setattr(file_handler, _HANDLER_TAG, True)
        root_logger.addHandler(file_handler)
    except Exception as e:
        logging.warning(f"Could not create log file: {e}")

    return root_logger
