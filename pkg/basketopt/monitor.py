#!/usr/bin/env python3
"""
Resource monitoring utilities for BasketOptimizer
Wall, user and system time plus resident memory of optimizer runs
"""

import platform
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from datetime import datetime
from typing import Any, Dict, Iterator, Optional

import psutil


@dataclass
class ResourceUsage:
    """Efficiency measures of one measured block"""
    wall_time: float = 0.0
    user_time: Optional[float] = None
    system_time: Optional[float] = None
    rss_mb: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class ResourceMonitor:
    """Measures CPU times and memory of the current process"""

    def __init__(self):
        try:
            self.process = psutil.Process()
        except psutil.Error:
            self.process = None

    def _cpu_times(self):
        if self.process is None:
            return None
        try:
            return self.process.cpu_times()
        except (psutil.Error, OSError):
            return None

    def _rss_mb(self) -> Optional[float]:
        if self.process is None:
            return None
        try:
            return self.process.memory_info().rss / (1024 ** 2)
        except (psutil.Error, OSError):
            return None

    @contextmanager
    def measure(self) -> Iterator[ResourceUsage]:
        """Fill a ResourceUsage with the deltas of the enclosed block"""
        usage = ResourceUsage()
        before = self._cpu_times()
        started = time.perf_counter()
        try:
            yield usage
        finally:
            usage.wall_time = time.perf_counter() - started
            after = self._cpu_times()
            if before is not None and after is not None:
                usage.user_time = after.user - before.user
                usage.system_time = after.system - before.system
            usage.rss_mb = self._rss_mb()


def default_workers() -> int:
    """Available parallelism"""
    return psutil.cpu_count(logical=True) or 1


def system_snapshot() -> Dict[str, Any]:
    """Machine description for result metadata"""
    try:
        memory = psutil.virtual_memory()
        return {
            "timestamp": datetime.now().isoformat(),
            "platform": platform.platform(),
            "processor": platform.processor(),
            "cpu_count_logical": psutil.cpu_count(logical=True),
            "cpu_count_physical": psutil.cpu_count(logical=False),
            "memory_total_gb": memory.total / (1024 ** 3),
            "memory_available_gb": memory.available / (1024 ** 3),
        }
    except Exception as e:
        return {"error": str(e)}
