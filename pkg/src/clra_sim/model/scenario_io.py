#!/usr/bin/env python3
"""
Scenario documents

JSON (de)serialisation of Scenario objects. Clusters are either listed
explicitly or described by a count and distance annulus, in which case
they are drawn from the scenario seed.
"""

import json
from typing import Any, Dict

import numpy as np

from ..core.utils import dbm_to_watts, substream_rng, watts_to_dbm
from .channel import Scenario, draw_cluster_phases, draw_front_positions

SCENARIO_KEYS = {"seed", "wavelength_m", "noise_dbm", "users", "clusters"}

# Substream keys used when a document leaves cluster details to the seed
CLUSTER_STREAM = 1
PHASE_STREAM = 2


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    """Explicit JSON-ready description of a scenario"""
    return {
        "seed": int(scenario.seed),
        "wavelength_m": float(scenario.wavelength_m),
        "noise_dbm": float(watts_to_dbm(scenario.noise_w)),
        "users": [
            {"xyz_m": [float(c) for c in xyz], "power_dbm": float(watts_to_dbm(p))}
            for xyz, p in zip(scenario.user_positions, scenario.user_powers_w)
        ],
        "clusters": [
            {
                "xyz_m": [float(c) for c in xyz],
                "rcs_m2": float(rcs),
                "phase_rad": float(phase),
            }
            for xyz, rcs, phase in zip(
                scenario.cluster_positions,
                scenario.cluster_rcs,
                scenario.cluster_phases,
            )
        ],
    }


def scenario_from_dict(document: Dict[str, Any]) -> Scenario:
    """
    Build a Scenario from a document

    Raises:
        ValueError: On missing or unknown keys and malformed entries
    """
    unknown = set(document) - SCENARIO_KEYS
    if unknown:
        raise ValueError(f"Unknown scenario keys: {', '.join(sorted(unknown))}")
    for key in ("seed", "users"):
        if key not in document:
            raise ValueError(f"Scenario document is missing '{key}'")

    seed = int(document["seed"])
    users = document["users"]
    if not users:
        raise ValueError("Scenario document needs at least one user")
    try:
        user_positions = np.array([u["xyz_m"] for u in users], dtype=float)
        user_powers = np.array([dbm_to_watts(float(u["power_dbm"])) for u in users])
    except (KeyError, TypeError) as e:
        raise ValueError(f"Malformed user entry: {e}") from e

    clusters = document.get("clusters", [])
    if isinstance(clusters, dict):
        count = int(clusters.get("count", 0))
        low, high = clusters.get("annulus", [20.0, 60.0])
        height = float(clusters.get("height_m", 10.0))
        rng = substream_rng(seed, CLUSTER_STREAM)
        positions = draw_front_positions(rng, count, float(low), float(high), height)
        rcs = np.full(count, float(clusters.get("rcs_m2", 1.0)))
        phases = draw_cluster_phases(substream_rng(seed, PHASE_STREAM), count)
    else:
        try:
            positions = np.array(
                [c["xyz_m"] for c in clusters], dtype=float
            ).reshape(-1, 3)
            rcs = np.array([float(c.get("rcs_m2", 1.0)) for c in clusters])
        except (KeyError, TypeError) as e:
            raise ValueError(f"Malformed cluster entry: {e}") from e
        drawn = draw_cluster_phases(substream_rng(seed, PHASE_STREAM), len(clusters))
        phases = np.array(
            [float(c.get("phase_rad", drawn[i])) for i, c in enumerate(clusters)]
        )

    return Scenario(
        user_positions=user_positions,
        user_powers_w=user_powers,
        cluster_positions=positions,
        cluster_rcs=rcs,
        cluster_phases=phases,
        noise_w=dbm_to_watts(float(document.get("noise_dbm", -80.0))),
        wavelength_m=float(document.get("wavelength_m", 0.0857)),
        seed=seed,
    )


def save_scenario(scenario: Scenario, filename: str):
    """Write a scenario document; OSError messages carry the path"""
    try:
        with open(filename, "w", encoding="utf-8") as f:
            json.dump(scenario_to_dict(scenario), f, indent=2)
    except OSError as e:
        raise OSError(f"Error saving scenario to {filename}: {e}") from e


def load_scenario(filename: str) -> Scenario:
    """Read a scenario document"""
    try:
        with open(filename, "r", encoding="utf-8") as f:
            document = json.load(f)
    except OSError as e:
        raise OSError(f"Error loading scenario from {filename}: {e}") from e
    except json.JSONDecodeError as e:
        raise ValueError(f"Error parsing scenario {filename}: {e}") from e
    return scenario_from_dict(document)
