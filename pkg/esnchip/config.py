import os
import logging
from pathlib import Path
from dotenv import load_dotenv

# --- Load Environment Variables ---
# A local .env file is optional; real environment variables win.
load_dotenv()

# --- Dataset Root ---
# Where load_har/load_pfc look for relative dataset paths.
DATA_ROOT = Path(os.getenv("ESNCHIP_DATA_ROOT", "data")).expanduser()

# --- Reports ---
REPORT_DIR = Path(os.getenv("ESNCHIP_REPORT_DIR", "reports")).expanduser()

# --- Logging ---
LOG_LEVEL = os.getenv("ESNCHIP_LOG_LEVEL", "INFO").upper()
# logging.getLevelNamesMapping() is 3.11+; it returns a copy of _nameToLevel.
_LEVEL_NAMES = getattr(logging, "getLevelNamesMapping", lambda: dict(logging._nameToLevel))()
if LOG_LEVEL not in _LEVEL_NAMES:
    logging.critical(f"ESNCHIP_LOG_LEVEL '{LOG_LEVEL}' is not a logging level")
    raise ValueError("ESNCHIP_LOG_LEVEL must be one of DEBUG, INFO, WARNING, ERROR, CRITICAL")

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"

# --- Sweep Workers ---
WORKERS_STR = os.getenv("ESNCHIP_WORKERS")
if WORKERS_STR:
    try:
        WORKERS = int(WORKERS_STR)
    except ValueError:
        logging.critical(f"ESNCHIP_WORKERS '{WORKERS_STR}' is not a valid integer")
        raise ValueError("ESNCHIP_WORKERS must be an integer")
    if WORKERS < 1:
        raise ValueError("ESNCHIP_WORKERS must be at least 1")
else:
    WORKERS = os.cpu_count() or 1


def setup_logging(level: str | None = None, tag: str | None = None) -> None:
    """
    Configures the root logger the same way for every entry point.
    A tag replaces the logger name column (e.g. SWEEP for batch workers).
    """
    fmt = LOG_FORMAT if tag is None else f"%(asctime)s - %(levelname)s - {tag} - %(message)s"
    logging.basicConfig(level=(level or LOG_LEVEL), format=fmt, force=True)


def resolve_data_path(path: str | os.PathLike) -> Path:
    """Relative dataset paths are taken from ESNCHIP_DATA_ROOT."""
    p = Path(path).expanduser()
    if p.is_absolute() or p.exists():
        return p
    return DATA_ROOT / p
