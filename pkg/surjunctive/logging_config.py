import logging
import logging.handlers
import os
from pathlib import Path
from typing import Optional

import numpy as np

_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - [%(run)s] %(message)s"


class RunContextFilter(logging.Filter):
    """Stamps every record with the command and seed of the current run."""

    def __init__(self) -> None:
        super().__init__()
        self.run = "-"

    def filter(self, record: logging.LogRecord) -> bool:
        record.run = self.run
        return True


_run_context = RunContextFilter()


def set_run_context(command: str, seed: int) -> None:
    _run_context.run = f"{command} seed={seed}"


def _log_floating_point_error(kind: str, flag: int) -> None:
    logging.getLogger("surjunctive.numerics").warning(
        f"Floating point {kind} (flag {flag}) outside a guarded region"
    )


def setup_logging(
    level: str = "INFO",
    log_file: Optional[str] = None,
    max_file_size: int = 10 * 1024 * 1024,  # 10 MB
    backup_count: int = 5,
) -> None:
    """Set up logging for a command line run.

    Console output goes to stderr so result files written to stdout or disk
    never pick up log lines. Python warnings (scipy's ``OptimizeWarning``,
    ``LinAlgWarning``) and unguarded numpy floating point errors are routed
    into the same handlers.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Path to log file. If None, only console logging is used.
        max_file_size: Maximum size of log file before rotation (in bytes)
        backup_count: Number of backup files to keep
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)
    root_logger.handlers.clear()

    formatter = logging.Formatter(fmt=_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")

    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(
            logging.handlers.RotatingFileHandler(
                filename=log_file,
                maxBytes=max_file_size,
                backupCount=backup_count,
                encoding="utf-8",
            )
        )
    for handler in handlers:
        handler.setLevel(numeric_level)
        handler.setFormatter(formatter)
        handler.addFilter(_run_context)
        root_logger.addHandler(handler)

    logging.captureWarnings(True)
    np.seterrcall(_log_floating_point_error)
    np.seterr(over="call", invalid="call", divide="call")

    if log_file:
        logging.info(f"File logging enabled: {log_file}")


def get_default_log_file() -> str:
    """Get the default log file path."""
    base = (
        Path.home() / "AppData" / "Local"
        if os.name == "nt"
        else Path.home() / ".local" / "share"
    )
    log_dir = base / "surjunctive" / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    return str(log_dir / "surjunctive.log")
