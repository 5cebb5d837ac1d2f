"""
Core functionality for the CL-RA simulator

Contains configuration management and shared utilities.
"""

from .config import (
    ConfigError,
    ConfigManager,
    ExperimentConfig,
    create_sample_config_file,
)
from .utils import log_message

__all__ = [
    "ConfigError",
    "ConfigManager",
    "ExperimentConfig",
    "create_sample_config_file",
    "log_message",
]
