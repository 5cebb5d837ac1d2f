#!/usr/bin/env python3
"""
Array Geometry for cross-linked rotatable antennas

Array and panel layouts, rotation matrices, pointing vectors and the
feasibility predicates for element-level (eccentric angle bound) and
panel-level (anti-reflection and CPU-blockage) rotation.

Antenna (m, n) of a cross-linked array takes its orientation from the row
angle alpha[m] and the column angle beta[n]. Panels are treated the same
way on the panel grid.
"""

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np

ELEMENT = "element"
PANEL = "panel"


class LayoutModeError(ValueError):
    """Raised when an operation is called for the wrong layout mode"""


def wrap_angle(angle):
    """Wrap angles into (-pi, pi]"""
    return np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2.0 * np.pi)


def symmetric_indices(count: int) -> np.ndarray:
    """Origin-centred grid indices; half-integers for even counts"""
    return np.arange(count, dtype=float) - (count - 1) / 2.0


@dataclass(frozen=True)
class ArrayLayout:
    """
    Rectangular antenna or panel grid

    In element mode rows x cols is the antenna grid. In panel mode rows x
    cols is the panel grid and each panel carries panel_rows x panel_cols
    antennas.
    """

    rows: int
    cols: int
    spacing: float
    mode: str = ELEMENT
    panel_rows: int = 1
    panel_cols: int = 1
    occupation_ratio: float = 1.0

    def __post_init__(self):
        if self.mode not in (ELEMENT, PANEL):
            raise ValueError(f"Unknown layout mode: {self.mode}")
        if min(self.rows, self.cols, self.panel_rows, self.panel_cols) < 1:
            raise ValueError("Layout dimensions must be positive integers")
        if self.spacing <= 0:
            raise ValueError("Antenna spacing must be positive")

    @property
    def is_panel(self) -> bool:
        return self.mode == PANEL

    @property
    def num_groups(self) -> int:
        """Antennas (element mode) or panels (panel mode) on the grid"""
        return self.rows * self.cols

    @property
    def num_panels(self) -> int:
        return self.rows * self.cols if self.is_panel else 1

    @property
    def antennas_per_panel(self) -> int:
        return self.panel_rows * self.panel_cols if self.is_panel else 1

    @property
    def num_antennas(self) -> int:
        if self.is_panel:
            return self.num_panels * self.antennas_per_panel
        return self.rows * self.cols

    @property
    def panel_pitch(self) -> float:
        size = max(self.panel_rows, self.panel_cols)
        return size * self.spacing * self.occupation_ratio

    def grid_indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """Row (m) and column (n) index of every grid slot, row-major"""
        m_idx, n_idx = np.meshgrid(
            symmetric_indices(self.rows), symmetric_indices(self.cols), indexing="ij"
        )
        return m_idx.ravel(), n_idx.ravel()

    def element_positions(self) -> np.ndarray:
        """Q x 3 antenna positions [0, n*spacing, m*spacing] (element mode)"""
        if self.is_panel:
            raise LayoutModeError("element_positions requires an element layout")
        m_idx, n_idx = self.grid_indices()
        return np.column_stack(
            [np.zeros_like(m_idx), n_idx * self.spacing, m_idx * self.spacing]
        )

    def local_offsets(self) -> np.ndarray:
        """Q_b x 3 antenna offsets inside one panel, in the panel frame"""
        m_idx, n_idx = np.meshgrid(
            symmetric_indices(self.panel_rows),
            symmetric_indices(self.panel_cols),
            indexing="ij",
        )
        m_idx, n_idx = m_idx.ravel(), n_idx.ravel()
        return np.column_stack(
            [np.zeros_like(m_idx), n_idx * self.spacing, m_idx * self.spacing]
        )

    def describe(self) -> str:
        if self.is_panel:
            return (
                f"{self.rows}x{self.cols} panels of "
                f"{self.panel_rows}x{self.panel_cols} antennas"
            )
        return f"{self.rows}x{self.cols} antennas"


@dataclass
class RotationState:
    """Row angles alpha (length M) and column angles beta (length N)"""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.alpha = wrap_angle(np.atleast_1d(self.alpha))
        self.beta = wrap_angle(np.atleast_1d(self.beta))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RotationState":
        return cls(np.zeros(rows), np.zeros(cols))

    @classmethod
    def from_vector(cls, u: np.ndarray, rows: int) -> "RotationState":
        u = np.asarray(u, dtype=float)
        return cls(u[:rows], u[rows:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    def expand(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-slot (alpha, beta), row-major over the M x N grid"""
        rows, cols = self.alpha.size, self.beta.size
        return np.repeat(self.alpha, cols), np.tile(self.beta, rows)


@dataclass
class Orientation:
    """Rotation matrix and pointing vector of one antenna or panel"""

    R: np.ndarray
    f: np.ndarray = field(init=False)

    def __post_init__(self):
        self.f = self.R[:, 0].copy()


def rotation_matrices(alpha, beta) -> np.ndarray:
    """
    Vectorised rotation matrices R = R_alpha @ R_beta

    Args:
        alpha: Angles about the horizontal axis (any shape)
        beta: Angles about the vertical axis (same shape)

    Returns:
        Array of shape alpha.shape + (3, 3)
    """
    alpha, beta = np.broadcast_arrays(
        np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float)
    )
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    zero = np.zeros_like(ca)
    R = np.stack(
        [
            np.stack([ca * cb, ca * sb, -sa], axis=-1),
            np.stack([-sb, cb, zero], axis=-1),
            np.stack([sa * cb, sa * sb, ca], axis=-1),
        ],
        axis=-2,
    )
    return R


def pointing_vectors(alpha, beta) -> np.ndarray:
    """Vectorised f = R @ e_x = [c_a c_b, -s_b, s_a c_b]"""
    alpha, beta = np.broadcast_arrays(
        np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float)
    )
    cb = np.cos(beta)
    return np.stack([np.cos(alpha) * cb, -np.sin(beta), np.sin(alpha) * cb], axis=-1)


def rotation_factors(alpha: float, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    """The two elementary rotations whose product is rotation_matrix"""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    r_alpha = np.array([[ca, 0.0, -sa], [0.0, 1.0, 0.0], [sa, 0.0, ca]])
    r_beta = np.array([[cb, sb, 0.0], [-sb, cb, 0.0], [0.0, 0.0, 1.0]])
    return r_alpha, r_beta


def rotation_matrix(alpha: float, beta: float) -> Orientation:
    """Rotation matrix and pointing vector for one (alpha, beta) pair"""
    return Orientation(rotation_matrices(alpha, beta))


def _check_index(index: int, size: int, name: str):
    if not 0 <= index < size:
        raise ValueError(f"{name} index {index} out of range [0, {size})")


def eccentric_cosine(state: RotationState, m: int, n: int) -> float:
    """cos(alpha_m) cos(beta_n), the cosine of the eccentric angle of (m, n)"""
    _check_index(m, state.alpha.size, "row")
    _check_index(n, state.beta.size, "column")
    return float(np.cos(state.alpha[m]) * np.cos(state.beta[n]))


def boresight_tilt(alpha, beta) -> np.ndarray:
    """
    1 - cos(alpha)cos(beta), vectorised over per-antenna angles

    Half-angle form 2 sin^2(alpha/2) + 2 cos(alpha) sin^2(beta/2), exact for
    angles too small to move cos() away from 1.0.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    half_a, half_b = np.sin(0.5 * alpha), np.sin(0.5 * beta)
    return 2.0 * half_a**2 + 2.0 * np.cos(alpha) * half_b**2


def element_bound_satisfied(
    state: RotationState, theta_max: float, tol: float = 1e-9
) -> np.ndarray:
    """
    Per-antenna eccentric angle bound check

    Returns:
        M x N boolean array, True where cos(a)cos(b) >= cos(theta_max) - tol
    """
    if not 0.0 <= theta_max <= math.pi / 2 + 1e-12:
        raise ValueError("theta_max must lie in [0, pi/2]")
    alpha_q, beta_q = state.expand()
    tilt = boresight_tilt(alpha_q, beta_q).reshape(state.alpha.size, -1)
    return tilt <= 2.0 * math.sin(0.5 * theta_max) ** 2 + tol


def panel_centers(layout: ArrayLayout) -> np.ndarray:
    """B x 3 panel centres on the symmetric panel grid, row-major (b = m*N + n)"""
    if not layout.is_panel:
        raise LayoutModeError("panel_centers requires a panel layout")
    m_idx, n_idx = layout.grid_indices()
    pitch = layout.panel_pitch
    return np.column_stack([np.zeros_like(m_idx), n_idx * pitch, m_idx * pitch])


def antenna_global_position(q_b, R, r_local) -> np.ndarray:
    """q_b + R @ r_local"""
    return np.asarray(q_b, dtype=float) + np.asarray(R, dtype=float) @ np.asarray(
        r_local, dtype=float
    )


def panel_antenna_positions(layout: ArrayLayout, R_panels: np.ndarray) -> np.ndarray:
    """Q x 3 global antenna positions given B x 3 x 3 panel rotations"""
    centers = panel_centers(layout)
    offsets = layout.local_offsets()
    rotated = np.einsum("bij,qj->bqi", R_panels, offsets)
    return (centers[:, None, :] + rotated).reshape(-1, 3)


class ConstraintViolation(NamedTuple):
    """One violated panel constraint"""

    kind: str  # "anti_reflection" or "cpu_blockage"
    panel: int
    other: int
    value: float


def panel_constraint_values(
    alpha_b: np.ndarray, beta_b: np.ndarray, m_idx: np.ndarray, n_idx: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Left-hand sides of the panel constraints for per-panel angles

    Returns:
        (pair, cpu) where pair[b, j] = n_b . (q_j - q_b) in grid units (must
        be <= 0 for j != b) and cpu[b] = n_b . q_b in grid units (must be >= 0);
        leading batch dimensions of the angle arrays are kept
    """
    y = -np.sin(beta_b)
    z = np.sin(alpha_b) * np.cos(beta_b)
    dn = n_idx[None, :] - n_idx[:, None]
    dm = m_idx[None, :] - m_idx[:, None]
    pair = y[..., :, None] * dn + z[..., :, None] * dm
    cpu = y * n_idx + z * m_idx
    return pair, cpu


def panel_violations(
    alpha_b: np.ndarray,
    beta_b: np.ndarray,
    m_idx: np.ndarray,
    n_idx: np.ndarray,
    tol: float = 1e-9,
) -> List[ConstraintViolation]:
    """List of violated anti-reflection and CPU-blockage constraints"""
    pair, cpu = panel_constraint_values(alpha_b, beta_b, m_idx, n_idx)
    violations = []
    count = pair.shape[0]
    for b in range(count):
        for j in range(count):
            if j != b and pair[b, j] > tol:
                violations.append(
                    ConstraintViolation("anti_reflection", b, j, float(pair[b, j]))
                )
    for b in np.flatnonzero(cpu < -tol):
        violations.append(
            ConstraintViolation("cpu_blockage", int(b), int(b), float(cpu[b]))
        )
    return violations


def panel_constraints_satisfied(
    state: RotationState, layout: ArrayLayout, tol: float = 1e-9
) -> Tuple[bool, List[ConstraintViolation]]:
    """
    Check anti-reflection and CPU-blockage constraints of a cross-linked panel array

    Returns:
        (all_satisfied, violations)
    """
    if not layout.is_panel:
        raise LayoutModeError("panel constraints require a panel layout")
    alpha_b, beta_b = state.expand()
    m_idx, n_idx = layout.grid_indices()
    violations = panel_violations(alpha_b, beta_b, m_idx, n_idx, tol)
    return len(violations) == 0, violations


@dataclass(frozen=True)
class FeasibleRange:
    """
    Closed-form admissible region of one panel

    y_sign and z_sign constrain y = -sin(beta) and z = sin(alpha)cos(beta),
    the in-plane components of the panel normal. Each is one of "free",
    "le0", "ge0" or "eq0". The normal must also face the +x half-space
    (cos(alpha)cos(beta) > 0), which the pairwise constraints alone do not
    enforce: with y = z = 0 they admit alpha = pi as well.
    """

    panel: int
    y_sign: str
    z_sign: str

    @staticmethod
    def _holds(value: float, sign: str, tol: float) -> bool:
        if sign == "le0":
            return value <= tol
        if sign == "ge0":
            return value >= -tol
        if sign == "eq0":
            return abs(value) <= tol
        return True

    def contains(self, alpha: float, beta: float, tol: float = 1e-12) -> bool:
        y = -math.sin(beta)
        z = math.sin(alpha) * math.cos(beta)
        if math.cos(alpha) * math.cos(beta) <= 0.0:
            return False
        return self._holds(y, self.y_sign, tol) and self._holds(z, self.z_sign, tol)

    @property
    def boresight_only(self) -> bool:
        """Normal restricted to the array axis (y = z = 0)"""
        return self.y_sign == "eq0" and self.z_sign == "eq0"


def _axis_sign(index: int, count: int) -> str:
    has_lower = index > 0
    has_upper = index < count - 1
    if has_lower and has_upper:
        return "eq0"
    if has_upper:
        return "le0"
    if has_lower:
        return "ge0"
    return "free"


def analytic_feasible_range(layout: ArrayLayout, panel_index: int) -> FeasibleRange:
    """
    Closed-form feasible (alpha, beta) region of one panel

    A neighbour on the +n side forces y <= 0, one on the -n side forces
    y >= 0, and likewise for z along m. Panels with neighbours on both sides
    of an axis are pinned to zero on that axis, so interior panels face
    along the array normal.
    """
    if not layout.is_panel:
        raise LayoutModeError("feasible ranges are defined for panel layouts only")
    _check_index(panel_index, layout.num_panels, "panel")
    row, col = divmod(panel_index, layout.cols)
    return FeasibleRange(
        panel=panel_index,
        y_sign=_axis_sign(col, layout.cols),
        z_sign=_axis_sign(row, layout.rows),
    )
