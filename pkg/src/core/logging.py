"""
Logging setup (loguru)
"""
import sys
from typing import Optional

from loguru import logger

from src.config.settings import get_settings

_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan> | {message}"


def setup_logging(level: Optional[str] = None, json: Optional[bool] = None) -> None:
    """Replace loguru's default sink with one configured from settings."""
    settings = get_settings()
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        format=_FORMAT,
        serialize=settings.LOG_JSON if json is None else json,
        backtrace=settings.DEBUG,
        diagnose=settings.DEBUG,
    )
