"""
CL-RA Simulator Package

Uplink sum-rate optimization for cross-linked rotatable antenna arrays.
"""

__version__ = "1.0.0"
__author__ = "CL-RA Simulator Team"
__description__ = "Cross-linked rotatable antenna array simulator"

# Package-level imports for convenience
from .core.config import ConfigManager, ExperimentConfig
from .core.utils import log_message

__all__ = [
    "ExperimentConfig",
    "ConfigManager",
    "log_message",
    "__version__",
]
