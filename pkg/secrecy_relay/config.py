"""Process configuration read from the environment (and an optional .env file).

Only operational knobs live here. Physical parameters always come from the
command line or from a replayed JSON config.
"""

import logging
import os
from dataclasses import dataclass

from dotenv import load_dotenv

from secrecy_relay.errors import InvalidParameterError

load_dotenv()

LOG_FORMAT = "[%(asctime)s] [%(name)s] %(levelname)s: %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


@dataclass(frozen=True)
class Settings:
    threads: int
    log_level: str
    cross_check: bool
    test_mode: bool


def is_test_mode() -> bool:
    """Return True when running under the test harness.

    Read on every call so that tests which set TEST_MODE after import still
    see the right value.
    """
    return os.environ.get("TEST_MODE", "0") == "1"


def _read_threads() -> int:
    raw = os.environ.get("SECRECY_RELAY_THREADS")
    if raw is None or not raw.strip():
        return os.cpu_count() or 1
    try:
        threads = int(raw)
    except ValueError as error:
        raise InvalidParameterError(f"SECRECY_RELAY_THREADS must be an integer, got {raw!r}") from error
    if threads < 1:
        raise InvalidParameterError(f"SECRECY_RELAY_THREADS must be >= 1, got {threads}")
    return threads


def get_settings() -> Settings:
    """Build settings from the current environment."""
    level = os.environ.get("SECRECY_RELAY_LOG_LEVEL", "INFO").upper()
    if level not in logging.getLevelNamesMapping():
        raise InvalidParameterError(f"SECRECY_RELAY_LOG_LEVEL is not a logging level: {level!r}")
    return Settings(
        threads=_read_threads(),
        log_level=level,
        cross_check=os.environ.get("SECRECY_RELAY_CROSS_CHECK", "0") == "1",
        test_mode=is_test_mode(),
    )


def configure_logging(level: str = "INFO") -> None:
    """Configure root logging once, on stderr, at the CLI entry point."""
    logging.basicConfig(
        level=logging.WARNING,
        format=LOG_FORMAT,
        datefmt=LOG_DATE_FORMAT,
        force=True,
    )
    logging.getLogger("secrecy_relay").setLevel(level)
