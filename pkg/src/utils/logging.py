import logging

from .config import LOG_FORMAT, LOG_LEVEL

PACKAGE_LOGGER = "src"


def get_logger(name: str) -> logging.Logger:
    """Get a configured logger instance (stderr, so stdout stays clean)."""
    logger = logging.getLogger(name)
    if not logger.hasHandlers():
        handler = logging.StreamHandler()
        formatter = logging.Formatter(LOG_FORMAT)
        handler.setFormatter(formatter)
        logger.addHandler(handler)
        logger.setLevel(LOG_LEVEL)
    return logger


def set_log_level(level: str) -> None:
    """Change the level of every logger created by this package."""
    for name, logger in logging.root.manager.loggerDict.items():
        if isinstance(logger, logging.Logger) and name.startswith(PACKAGE_LOGGER):
            logger.setLevel(level.upper())
