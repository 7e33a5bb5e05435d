"""
Utilities package for Tire GPR
"""

from utils.errors import ConfigError, DataError, NumericalError, TireGprError
from utils.logger import Logger

__all__ = ["ConfigError", "DataError", "NumericalError", "TireGprError", "Logger"]
