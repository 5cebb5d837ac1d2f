"""
Receivers, LP solver and rotation optimizers
"""

from .discrete_ga import AngleGrid, GaParams, run_ga
from .parameterization import ElementRotation, PanelRotation
from .rotation_opt import FeasDirParams, alternating_optimize

__all__ = [
    "AngleGrid",
    "ElementRotation",
    "FeasDirParams",
    "GaParams",
    "PanelRotation",
    "alternating_optimize",
    "run_ga",
]
