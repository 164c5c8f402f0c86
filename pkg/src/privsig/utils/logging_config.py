"""Logging configuration for privsig."""

import logging
import sys
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional, Union


def setup_logging(
    level: Optional[str] = None,
    format_style: str = "detailed",
    log_dir: Optional[Union[str, Path]] = None,
):
    """
    Setup logging configuration for the command-line tool.

    Console output goes to stderr so that stdout stays reserved for the
    JSON/CSV payload.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        format_style: Format style ("simple" or "detailed")
        log_dir: Directory for daily rotating log files (no file output if None)
    """
    if level is None:
        level = "WARNING"

    numeric_level = getattr(logging, level.upper(), logging.WARNING)

    formats = {
        "simple": "%(levelname)s: %(message)s",
        "detailed": "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    }

    log_format = formats.get(format_style, formats["detailed"])

    handlers = [logging.StreamHandler(sys.stderr)]

    log_filename = None
    if log_dir is not None:
        logs_dir = Path(log_dir)
        logs_dir.mkdir(parents=True, exist_ok=True)

        today = datetime.now().strftime("%Y-%m-%d")
        log_filename = logs_dir / f"{today}.log"

        # 10MB per file, 30 days of logs
        handlers.append(
            RotatingFileHandler(
                log_filename,
                maxBytes=10*1024*1024,
                backupCount=30,
                encoding='utf-8'
            )
        )

    logging.basicConfig(
        level=numeric_level,
        format=log_format,
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=handlers,
        force=True
    )

    # Third-party libraries stay quiet unless something is wrong
    logging.getLogger("asyncio").setLevel(logging.WARNING)
    logging.getLogger("numpy").setLevel(logging.WARNING)

    logger = logging.getLogger("privsig")
    logger.debug("Logging configured at level %s", level.upper())
    if log_filename is not None:
        logger.debug(f"Today's log file: {log_filename}")

    return logger


def get_run_logger():
    """Get the logger that brackets each command run."""
    return logging.getLogger("privsig.run")
