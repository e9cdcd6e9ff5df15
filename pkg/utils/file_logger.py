"""
Core utilities for the LDGCN toolkit, including logging and data persistence.
"""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from utils.config import LOG_DIR, LOG_LEVEL, OUTPUT_DIR, RunConfig


def setup_logger(run_timestamp: str, command: Optional[str] = None, log_dir=None) -> logging.Logger:
    """
    Sets up the LDGCN logger to write to both a timestamped file and the console.

    Handlers left over from an earlier run that logged elsewhere are closed and
    replaced, so every run's records land in its own file.

    Args:
        run_timestamp: The timestamp for the current run, used for unique filenames.
        command: The CLI subcommand; when given, a header line opens the run.
        log_dir: Target directory; defaults to LDGCN_LOG_DIR.

    Returns:
        A configured logger instance.
    """
    log_dir = Path(log_dir or LOG_DIR)
    log_dir.mkdir(parents=True, exist_ok=True)
    log_filename = log_dir / f"ldgcn-run-{run_timestamp}.log"

    logger = logging.getLogger("LDGCN")
    logger.setLevel(LOG_LEVEL)

    files = [h.baseFilename for h in logger.handlers if isinstance(h, logging.FileHandler)]
    if files != [os.path.abspath(log_filename)]:
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
            handler.close()

        fh = logging.FileHandler(log_filename, encoding="utf-8")
        fh.setLevel(LOG_LEVEL)

        ch = logging.StreamHandler()
        ch.setLevel(LOG_LEVEL)

        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        )
        fh.setFormatter(formatter)
        ch.setFormatter(formatter)

        logger.addHandler(fh)
        logger.addHandler(ch)

    if command:
        logger.info(f"=== LDGCN run {run_timestamp}: {command} ===")
    return logger


def log_run_config(logger: logging.Logger, cfg: RunConfig):
    """One `key=value` line with every run setting, in field order."""
    logger.info("Run config: " + " ".join(f"{key}={value}" for key, value in cfg.to_dict().items()))


def save_structured_data(
    data: Dict[str, Any], name: str, run_timestamp: str, output_dir=None
) -> Path:
    """
    Saves run data into a structured, timestamped JSON file.

    Args:
        data: The dictionary containing the data to be saved.
        name: A short artefact name, e.g. "eval" or "bench".
        run_timestamp: The timestamp for the current run, used for unique filenames.
        output_dir: Target directory; defaults to LDGCN_OUTPUT_DIR.

    Returns:
        The path to the newly created JSON file.
    """
    output_dir = Path(output_dir or OUTPUT_DIR)
    output_dir.mkdir(parents=True, exist_ok=True)
    json_filename = output_dir / f"{name}-{run_timestamp}.json"

    with open(json_filename, "w", encoding="utf-8") as json_file:
        json.dump(data, json_file, indent=4)

    return json_filename
