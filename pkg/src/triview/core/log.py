import logging

from rich.console import Console
from rich.logging import RichHandler

ROOT_LOGGER = "triview"


def configure_logging(quiet: bool = False, verbose: bool = False, console: Console | None = None) -> logging.Logger:
    """Attach a single rich handler to the package logger.

    Calling it again replaces the handler rather than stacking another one.
    """
    level = logging.WARNING if quiet else logging.DEBUG if verbose else logging.INFO
    logger = logging.getLogger(ROOT_LOGGER)
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(
        console=console or Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
    )
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
