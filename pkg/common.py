""" Common settings and logging setup for the honest-tail scripts. """
import logging
import os
import sys
from typing import Optional

import dotenv


dotenv.load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240601
DEFAULT_CV_TABLE_TARGET = "critical_values.txt"
DEFAULT_STUDY_CONFIG = "config_desk_scale.json"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

# Unset means: look up critical values in the shipped reference grid.
CV_TABLE_PATH = os.getenv("HONEST_TAIL_CV_TABLE") or None

SEED_VAR = os.getenv("HONEST_TAIL_SEED", str(DEFAULT_SEED))
if SEED_VAR.isdigit():
    SEED = int(SEED_VAR)
else:
    SEED = DEFAULT_SEED

WORKERS_VAR = os.getenv("HONEST_TAIL_WORKERS", "1")
if WORKERS_VAR.isdigit() and int(WORKERS_VAR) > 0:
    WORKERS = int(WORKERS_VAR)
else:
    WORKERS = 1

STUDY_CONFIG = os.getenv("HONEST_TAIL_STUDY_CONFIG", DEFAULT_STUDY_CONFIG)


def get_log_level(override: Optional[str] = None) -> str:
    """
    Get the log level from the argument, the HONEST_TAIL_LOG_LEVEL environment variable, or INFO.

    :param override: Level name from the command line, if any
    :return: Upper-case level name
    """
    level = (override or os.getenv("HONEST_TAIL_LOG_LEVEL", "INFO")).upper()
    if level not in LOG_LEVELS:
        print(f"Warning: Invalid log level '{level}', defaulting to INFO", file=sys.stderr)
        level = "INFO"
    return level


def configure_logging(level: Optional[str] = None) -> str:
    """
    Send log records to stderr so stdout carries only reports.

    :param level: Level name overriding the environment
    :return: The level that was applied
    """
    resolved = get_log_level(level)
    logging.basicConfig(level=resolved, format=LOG_FORMAT, stream=sys.stderr, force=True)
    if SEED_VAR != str(SEED):
        logger.warning("Ignoring non-numeric HONEST_TAIL_SEED=%r; using %d", SEED_VAR, SEED)
    if WORKERS_VAR != str(WORKERS):
        logger.warning("Ignoring invalid HONEST_TAIL_WORKERS=%r; using %d", WORKERS_VAR, WORKERS)
    return resolved


def progress_enabled() -> bool:
    """
    Progress bars are shown only when INFO records would be shown.
    """
    return logging.getLogger().getEffectiveLevel() <= logging.INFO


def cv_table_target(path: Optional[str] = None) -> str:
    """
    Where `cv-table` writes: the argument, else HONEST_TAIL_CV_TABLE, else critical_values.txt.
    """
    return path or CV_TABLE_PATH or DEFAULT_CV_TABLE_TARGET
