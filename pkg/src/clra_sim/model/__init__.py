"""
Array geometry, channel synthesis and scenario documents
"""

from .channel import GainPattern, Scenario
from .geometry import ArrayLayout, LayoutModeError, RotationState

__all__ = [
    "ArrayLayout",
    "GainPattern",
    "LayoutModeError",
    "RotationState",
    "Scenario",
]
