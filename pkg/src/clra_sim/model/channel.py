#!/usr/bin/env python3
"""
Channel synthesis for rotatable antenna arrays

Directional gain pattern, scenario description and LoS/NLoS channel
matrices for element-level and panel-level rotation.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from .geometry import (
    ArrayLayout,
    LayoutModeError,
    RotationState,
    panel_antenna_positions,
    pointing_vectors,
    rotation_matrices,
)


@dataclass(frozen=True)
class GainPattern:
    """G(eps) = G0 cos(eps)^(2p) on the front half-space, G0 = 2(2p+1)"""

    p: float = 2.0

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("Directivity factor p must be non-negative")

    @property
    def g0(self) -> float:
        return 2.0 * (2.0 * self.p + 1.0)

    def gain(self, cos_eps) -> np.ndarray:
        cos_eps = np.asarray(cos_eps, dtype=float)
        front = cos_eps > 0
        safe = np.where(front, cos_eps, 1.0)
        return np.where(front, self.g0 * safe ** (2.0 * self.p), 0.0)


def directional_gain(pattern: GainPattern, cos_eps: float) -> float:
    """Gain of the pattern at an offset with cosine cos_eps"""
    return float(pattern.gain(cos_eps))


def hemisphere_power(pattern: GainPattern) -> float:
    """Integral of G over the front hemisphere; equals 4*pi for a normalised pattern"""
    value, _ = integrate.quad(
        lambda eps: float(pattern.gain(math.cos(eps))) * math.sin(eps),
        0.0,
        math.pi / 2,
        epsabs=1e-12,
        epsrel=1e-10,
    )
    return 2.0 * math.pi * value


def reference_gain(wavelength: float) -> float:
    """Free-space channel power gain at 1 m, (lambda / 4 pi)^2"""
    return (wavelength / (4.0 * math.pi)) ** 2


@dataclass
class Scenario:
    """
    Users, scatterer clusters and link budget of one channel realisation

    Powers are in watts, positions in metres, phases in radians.
    """

    user_positions: np.ndarray
    user_powers_w: np.ndarray
    cluster_positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    cluster_rcs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cluster_phases: np.ndarray = field(default_factory=lambda: np.zeros(0))
    noise_w: float = 1e-11
    wavelength_m: float = 0.0857
    seed: int = 0

    def __post_init__(self):
        self.user_positions = np.atleast_2d(
            np.asarray(self.user_positions, dtype=float)
        )
        self.user_powers_w = np.broadcast_to(
            np.asarray(self.user_powers_w, dtype=float), (self.num_users,)
        ).copy()
        self.cluster_positions = np.asarray(
            self.cluster_positions, dtype=float
        ).reshape(-1, 3)
        self.cluster_rcs = np.asarray(self.cluster_rcs, dtype=float).reshape(-1)
        self.cluster_phases = np.asarray(self.cluster_phases, dtype=float).reshape(-1)
        if self.num_users < 1:
            raise ValueError("A scenario needs at least one user")
        count = self.cluster_positions.shape[0]
        if self.cluster_rcs.size != count or self.cluster_phases.size != count:
            raise ValueError("Cluster positions, RCS and phases must have equal length")
        if self.noise_w <= 0:
            raise ValueError("Noise power must be positive")

    @property
    def num_users(self) -> int:
        return self.user_positions.shape[0]

    @property
    def num_clusters(self) -> int:
        return self.cluster_positions.shape[0]

    @property
    def beta0(self) -> float:
        return reference_gain(self.wavelength_m)

    @property
    def normalized_powers(self) -> np.ndarray:
        """P_k / sigma^2"""
        return self.user_powers_w / self.noise_w

    def with_powers(self, power_w: float) -> "Scenario":
        """Copy with every user transmitting at power_w"""
        return Scenario(
            self.user_positions,
            np.full(self.num_users, power_w),
            self.cluster_positions,
            self.cluster_rcs,
            self.cluster_phases,
            self.noise_w,
            self.wavelength_m,
            self.seed,
        )

    def subset_users(self, count: int) -> "Scenario":
        """Copy keeping the first count users"""
        return Scenario(
            self.user_positions[:count],
            self.user_powers_w[:count],
            self.cluster_positions,
            self.cluster_rcs,
            self.cluster_phases,
            self.noise_w,
            self.wavelength_m,
            self.seed,
        )


def draw_front_positions(
    rng: np.random.Generator,
    count: int,
    distance_min: float,
    distance_max: float,
    height: float,
) -> np.ndarray:
    """
    Random positions in front of the array (x > 0)

    Horizontal distance is uniform in [distance_min, distance_max], azimuth
    uniform in (-pi/2, pi/2) and height uniform in [-height, height].
    """
    distance = rng.uniform(distance_min, distance_max, size=count)
    azimuth = rng.uniform(-math.pi / 2, math.pi / 2, size=count)
    z = rng.uniform(-height, height, size=count)
    return np.column_stack([distance * np.cos(azimuth), distance * np.sin(azimuth), z])


def draw_cluster_phases(rng: np.random.Generator, count: int) -> np.ndarray:
    """Scattering phases uniform on [0, 2 pi)"""
    return rng.uniform(0.0, 2.0 * math.pi, size=count)


def _distances(
    points: np.ndarray, targets: np.ndarray, what: str
) -> Tuple[np.ndarray, np.ndarray]:
    diff = targets[None, :, :] - points[:, None, :]
    dist = np.linalg.norm(diff, axis=-1)
    if np.any(dist == 0):
        raise ValueError(f"Coincident points between antennas and {what}")
    return diff, dist


def los_coefficient(
    pattern: GainPattern,
    f: np.ndarray,
    t: np.ndarray,
    v: np.ndarray,
    wavelength: float,
    beta0: float,
) -> complex:
    """LoS coefficient sqrt(beta0 G(eps)) / r * exp(-j 2 pi r / lambda)"""
    d = np.asarray(v, dtype=float) - np.asarray(t, dtype=float)
    r = float(np.linalg.norm(d))
    if r == 0:
        raise ValueError("User coincides with the antenna")
    gain = directional_gain(pattern, float(np.dot(f, d)) / r)
    return complex(math.sqrt(beta0 * gain) / r * np.exp(-2j * math.pi * r / wavelength))


def nlos_coefficient(
    pattern: GainPattern,
    f: np.ndarray,
    t: np.ndarray,
    cluster_positions: np.ndarray,
    cluster_rcs: np.ndarray,
    cluster_phases: np.ndarray,
    v: np.ndarray,
    wavelength: float,
    beta0: float,
) -> complex:
    """Bistatic single-bounce sum over clusters; pattern gain on the antenna side"""
    total = 0j
    clusters = np.atleast_2d(cluster_positions)
    for s, rcs, chi in zip(clusters, cluster_rcs, cluster_phases):
        d_bs = np.asarray(s, dtype=float) - np.asarray(t, dtype=float)
        r_d = float(np.linalg.norm(d_bs))
        r_dk = float(np.linalg.norm(np.asarray(v, dtype=float) - s))
        if r_d == 0 or r_dk == 0:
            raise ValueError("Cluster coincides with an antenna or a user")
        cos_eps = float(np.dot(f, d_bs)) / r_d
        g_nlos = beta0 * directional_gain(pattern, cos_eps) / r_d**2
        amplitude = math.sqrt(g_nlos * rcs / (4.0 * math.pi * r_dk**2))
        phase = -2.0 * math.pi * (r_d + r_dk) / wavelength + chi
        total += amplitude * np.exp(1j * phase)
    return complex(total)


def channel_from_orientations(
    scenario: Scenario,
    positions: np.ndarray,
    pointing: np.ndarray,
    pattern: GainPattern,
) -> np.ndarray:
    """
    Q x K channel for antennas at positions with boresights pointing

    Args:
        scenario: Users and clusters
        positions: Q x 3 antenna positions
        pointing: Q x 3 unit boresight vectors
        pattern: Antenna gain pattern

    Returns:
        Complex Q x K matrix, LoS plus NLoS
    """
    wavenumber = 2.0 * math.pi / scenario.wavelength_m
    beta0 = scenario.beta0

    diff, dist = _distances(positions, scenario.user_positions, "users")
    cos_eps = np.einsum("qc,qkc->qk", pointing, diff) / dist
    H = np.sqrt(beta0 * pattern.gain(cos_eps)) / dist * np.exp(-1j * wavenumber * dist)

    if scenario.num_clusters:
        diff_c, dist_c = _distances(positions, scenario.cluster_positions, "clusters")
        cos_c = np.einsum("qc,qdc->qd", pointing, diff_c) / dist_c
        bs_leg = (
            np.sqrt(beta0 * pattern.gain(cos_c))
            / dist_c
            * np.exp(-1j * wavenumber * dist_c)
        )
        _, dist_dk = _distances(
            scenario.cluster_positions, scenario.user_positions, "users"
        )
        user_leg = (
            np.sqrt(scenario.cluster_rcs / (4.0 * math.pi))[:, None]
            / dist_dk
            * np.exp(-1j * wavenumber * dist_dk + 1j * scenario.cluster_phases[:, None])
        )
        H = H + bs_leg @ user_leg

    return H


def element_channel_from_angles(
    scenario: Scenario,
    layout: ArrayLayout,
    alpha_q: np.ndarray,
    beta_q: np.ndarray,
    pattern: GainPattern,
) -> np.ndarray:
    """Element-mode channel with an independent (alpha, beta) per antenna"""
    if layout.is_panel:
        raise LayoutModeError("element channel requires an element layout")
    return channel_from_orientations(
        scenario, layout.element_positions(), pointing_vectors(alpha_q, beta_q), pattern
    )


def panel_channel_from_angles(
    scenario: Scenario,
    layout: ArrayLayout,
    alpha_b: np.ndarray,
    beta_b: np.ndarray,
    pattern: GainPattern,
) -> np.ndarray:
    """Panel-mode channel with an independent (alpha, beta) per panel"""
    if not layout.is_panel:
        raise LayoutModeError("panel channel requires a panel layout")
    R = rotation_matrices(alpha_b, beta_b)
    positions = panel_antenna_positions(layout, R)
    normals = np.repeat(R[:, :, 0], layout.antennas_per_panel, axis=0)
    return channel_from_orientations(scenario, positions, normals, pattern)


def element_channel_matrix(
    scenario: Scenario,
    layout: ArrayLayout,
    state: RotationState,
    pattern: Optional[GainPattern] = None,
) -> np.ndarray:
    """Cross-linked element channel; antenna q = m*N + n"""
    alpha_q, beta_q = state.expand()
    return element_channel_from_angles(
        scenario, layout, alpha_q, beta_q, pattern or GainPattern()
    )


def panel_channel_matrix(
    scenario: Scenario,
    layout: ArrayLayout,
    state: RotationState,
    pattern: Optional[GainPattern] = None,
) -> np.ndarray:
    """Cross-linked panel channel; antennas ordered by (panel, antenna in panel)"""
    alpha_b, beta_b = state.expand()
    return panel_channel_from_angles(
        scenario, layout, alpha_b, beta_b, pattern or GainPattern()
    )
