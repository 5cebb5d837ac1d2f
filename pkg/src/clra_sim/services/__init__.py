"""
Experiment orchestration services
"""

from .experiment_service import ExperimentService

__all__ = [
    "ExperimentService",
]
