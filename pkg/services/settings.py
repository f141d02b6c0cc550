import os
import logging

logger = logging.getLogger(__name__)

ROOT_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

DEFAULT_FUEL = 10_000
DEFAULT_CONVERSION_FUEL = 1000
DEFAULT_JOBS = 1


def _get_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == '':
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring malformed {name}={raw!r}, using {default}")
        return default
    if value < 1:
        logger.warning(f"Ignoring non-positive {name}={raw!r}, using {default}")
        return default
    return value


def get_fuel() -> int:
    return _get_int('GATFORGE_FUEL', DEFAULT_FUEL)


def get_conversion_fuel() -> int:
    return _get_int('GATFORGE_CONVERSION_FUEL', DEFAULT_CONVERSION_FUEL)


def get_jobs() -> int:
    return _get_int('GATFORGE_JOBS', DEFAULT_JOBS)


def get_corpus_dir() -> str:
    return os.getenv('GATFORGE_CORPUS', os.path.join(ROOT_DIR, 'corpus'))
