"""
Shared fixtures for the CL-RA simulator tests
"""

import math
import os
import sys

import numpy as np
import pytest

# Add src to path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from clra_sim.core.config import ExperimentConfig  # noqa: E402
from clra_sim.core.utils import dbm_to_watts  # noqa: E402
from clra_sim.model.channel import Scenario  # noqa: E402
from clra_sim.model.geometry import ArrayLayout  # noqa: E402

WAVELENGTH = 0.0857
SPACING = WAVELENGTH / 2


@pytest.fixture
def element_layout():
    """2 x 3 element array at half-wavelength spacing"""
    return ArrayLayout(2, 3, SPACING)


@pytest.fixture
def panel_layout():
    """2 x 2 panels of 2 x 2 antennas"""
    return ArrayLayout(2, 2, SPACING, mode="panel", panel_rows=2, panel_cols=2)


@pytest.fixture
def small_scenario():
    """Three users and two scatterers in front of the array"""
    users = np.array([[40.0, 10.0, 3.0], [55.0, -20.0, -4.0], [60.0, 5.0, 8.0]])
    clusters = np.array([[25.0, 12.0, 2.0], [35.0, -15.0, -3.0]])
    return Scenario(
        user_positions=users,
        user_powers_w=dbm_to_watts(10.0),
        cluster_positions=clusters,
        cluster_rcs=np.ones(2),
        cluster_phases=np.array([0.3, 2.1]),
        noise_w=dbm_to_watts(-80.0),
        wavelength_m=WAVELENGTH,
        seed=7,
    )


@pytest.fixture
def los_scenario():
    """Single user, no scatterers"""
    return Scenario(
        user_positions=np.array([[50.0, 12.0, 6.0]]),
        user_powers_w=dbm_to_watts(10.0),
        noise_w=dbm_to_watts(-80.0),
        wavelength_m=WAVELENGTH,
    )


@pytest.fixture
def small_config():
    """Desk-scale configuration that runs in seconds"""
    return ExperimentConfig(
        rows=2,
        cols=2,
        panel_grid_rows=2,
        panel_grid_cols=1,
        panel_rows=1,
        panel_cols=2,
        num_users=2,
        num_clusters=2,
        theta_max_rad=math.pi / 6,
        trials=2,
        seed=11,
        inner_max_iter=15,
        outer_max_iter=4,
        ga_population=12,
        ga_generations=4,
        grid_levels=5,
        record_timing=False,
    )
