#!/usr/bin/env python3
"""
Centralized Logging Configuration for BasketOptimizer
Log directories, logger factory and the JSON metadata envelope for results
"""

import json
import logging
import platform
import shutil
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

LOG_FORMAT = '%(asctime)s | %(name)s | %(levelname)s | %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
LOG_TYPES = ("runs", "studies", "system")


def _json_default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, "value"):
        return value.value
    return str(value)


def package_versions() -> Dict[str, str]:
    """Versions of the numeric stack, recorded in every envelope"""
    import pandas
    import psutil
    import pydantic
    import scipy

    from . import __version__

    return {
        "basketopt": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pandas.__version__,
        "pydantic": pydantic.VERSION,
        "psutil": psutil.__version__,
    }


def write_envelope(path: Union[str, Path], payload: Dict[str, Any], kind: str,
                   extra: Optional[Dict[str, Any]] = None) -> str:
    """Write payload as JSON with a metadata block (kind, timestamp, versions)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = dict(payload)
    document["metadata"] = {
        "timestamp": datetime.now().isoformat(timespec="seconds"),
        "kind": kind,
        "versions": package_versions(),
        "generated_by": "BasketOptimizer",
        **(extra or {}),
    }
    with open(path, 'w') as f:
        json.dump(document, f, indent=2, sort_keys=True, default=_json_default)
    return str(path)


class StudyLogger:
    """Centralized logging manager for BasketOptimizer"""

    def __init__(self, base_dir: str = "logs"):
        self.base_dir = Path(base_dir)
        self.setup_log_directories()
        self.loggers: Dict[str, logging.Logger] = {}

    def setup_log_directories(self):
        """Create organized log directory structure"""
        for dir_name in (*LOG_TYPES, "archive"):
            (self.base_dir / dir_name).mkdir(parents=True, exist_ok=True)

    def get_logger(self, name: str, log_type: str = "system", level: int = logging.INFO) -> logging.Logger:
        """Get or create a logger writing to logs/<log_type>/<name>_<date>.log and the console"""
        if name in self.loggers:
            return self.loggers[name]
        if log_type not in LOG_TYPES:
            raise ValueError(f"Unknown log type '{log_type}', expected one of {', '.join(LOG_TYPES)}")

        logger = logging.getLogger(name)
        logger.setLevel(level)
        for handler in logger.handlers[:]:
            logger.removeHandler(handler)
            handler.close()

        timestamp = datetime.now().strftime("%Y%m%d")
        file_handler = logging.FileHandler(self.base_dir / log_type / f"{name}_{timestamp}.log")
        console_handler = logging.StreamHandler()
        formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
        for handler in (file_handler, console_handler):
            handler.setLevel(level)
            handler.setFormatter(formatter)
            logger.addHandler(handler)

        self.loggers[name] = logger
        return logger

    def archive_old_logs(self, days_old: int = 7) -> int:
        """Move logs older than days_old into the archive directory"""
        cutoff = datetime.now() - timedelta(days=days_old)
        archived = 0
        for log_type in LOG_TYPES:
            for log_file in (self.base_dir / log_type).glob("*.log"):
                if datetime.fromtimestamp(log_file.stat().st_mtime) < cutoff:
                    shutil.move(str(log_file), str(self.base_dir / "archive" / log_file.name))
                    archived += 1
        return archived

    def get_log_summary(self) -> Dict[str, Any]:
        """File counts per log directory"""
        summary = {}
        for log_type in (*LOG_TYPES, "archive"):
            files = sorted(p.name for p in (self.base_dir / log_type).glob("*"))
            summary[log_type] = {"count": len(files), "files": files[:5]}
        return summary


_logger_instance: Optional[StudyLogger] = None


def get_study_logger(base_dir: Optional[str] = None) -> StudyLogger:
    global _logger_instance
    if _logger_instance is None or (base_dir is not None and Path(base_dir) != _logger_instance.base_dir):
        _logger_instance = StudyLogger(base_dir or "logs")
    return _logger_instance


def get_logger(name: str, log_type: str = "system", level: int = logging.INFO) -> logging.Logger:
    """Get a logger instance with organized structure"""
    return get_study_logger().get_logger(name, log_type, level)
