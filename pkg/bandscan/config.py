"""
Process-level settings, read from the environment.

Analysis parameters are not configured here; they travel in
``bandscan.schemas.AnalysisConfig``.
"""
import logging
import os

from bandscan.errors import ConfigError

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"

LOG_LEVEL = os.getenv("BANDSCAN_LOG_LEVEL", "INFO")
WORKERS = int(os.getenv("BANDSCAN_WORKERS", str(min(8, os.cpu_count() or 1))))
DEFAULT_D0 = int(os.getenv("BANDSCAN_D0", "100000"))
MAX_UPLOAD_ROWS = int(os.getenv("BANDSCAN_MAX_UPLOAD_ROWS", "2000000"))


def configure_logging(level: str = None) -> None:
    """Install the console handler once; later calls only adjust the level."""
    name = (level or LOG_LEVEL).upper()
    if not isinstance(logging.getLevelName(name), int):
        raise ConfigError(f"unknown log level {level or LOG_LEVEL!r}", log_level=level or LOG_LEVEL)
    root = logging.getLogger("bandscan")
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
        root.propagate = False
    root.setLevel(name)
