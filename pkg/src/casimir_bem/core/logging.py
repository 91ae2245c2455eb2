import logging
import logging.config
from typing import Optional

from casimir_bem.core.config import settings

LOG_FORMAT = "%(asctime)s %(levelname)-5.5s [%(name)s] %(message)s"
DATE_FORMAT = "%H:%M:%S"


def configure_logging(level: Optional[str] = None) -> None:
    """
    Install a single stderr handler on the package logger.

    `level` falls back to settings.LOG_LEVEL; names are case-insensitive.
    """
    resolved = (level or settings.LOG_LEVEL).upper()
    if not isinstance(logging.getLevelName(resolved), int):
        resolved = "INFO"

    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "generic": {"format": LOG_FORMAT, "datefmt": DATE_FORMAT},
            },
            "handlers": {
                "console": {
                    "class": "logging.StreamHandler",
                    "stream": "ext://sys.stderr",
                    "formatter": "generic",
                },
            },
            "loggers": {
                "casimir_bem": {
                    "level": resolved,
                    "handlers": ["console"],
                    "propagate": False,
                },
            },
        }
    )
