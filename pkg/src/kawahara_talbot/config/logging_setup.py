import logging

from rich.console import Console
from rich.logging import RichHandler

PACKAGE_LOGGER = __name__.rsplit(".config", 1)[0]


def configure_logging(level: str | int = "WARNING") -> logging.Logger:
    """Send package logs through a single rich handler on stderr."""
    logger = logging.getLogger(PACKAGE_LOGGER)
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
