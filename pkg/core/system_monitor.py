import platform
import psutil
from typing import Dict
import logging

logger = logging.getLogger(__name__)


class SystemMonitor:
    @staticmethod
    def get_host_info() -> Dict:
        """Host description stored in run manifests"""
        try:
            memory = psutil.virtual_memory()
            return {
                "platform": platform.platform(),
                "python": platform.python_version(),
                "physicalCores": psutil.cpu_count(logical=False),
                "logicalCores": psutil.cpu_count(logical=True),
                "memoryTotal": memory.total,
            }
        except Exception as e:
            logger.error(f"Error getting host info: {e}")
            return {}

    @staticmethod
    def get_load() -> Dict:
        try:
            return {
                "cpuUsage": psutil.cpu_percent(interval=None),
                "memoryUsage": psutil.virtual_memory().percent,
            }
        except Exception as e:
            logger.error(f"Error getting system load: {e}")
            return {}
