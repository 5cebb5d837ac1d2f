#!/usr/bin/env python3
"""
Rotation variables and their constraints

A parameterization maps a flat angle vector u to per-antenna or per-panel
orientations, builds the channel, evaluates the exact constraints as
g(u) <= 0 and emits the linearized rows used by the feasible-direction
subproblem. The cross-linked variants share one angle per row and one per
column; the flexible variants give every antenna (or panel) its own pair.
"""

import math
from typing import Tuple

import numpy as np

from ..model.channel import (
    GainPattern,
    Scenario,
    element_channel_from_angles,
    panel_channel_from_angles,
)
from ..model.geometry import (
    ArrayLayout,
    LayoutModeError,
    RotationState,
    boresight_tilt,
    panel_constraint_values,
)

CROSS_LINKED = "cross_linked"
FLEXIBLE = "flexible"


class RotationParameterization:
    """Base class; u = [alpha part, beta part]"""

    requires_panel = False

    def __init__(self, layout: ArrayLayout, coupling: str = CROSS_LINKED):
        if layout.is_panel != self.requires_panel:
            wanted = "panel" if self.requires_panel else "element"
            raise LayoutModeError(f"{type(self).__name__} needs a {wanted} layout")
        if coupling not in (CROSS_LINKED, FLEXIBLE):
            raise ValueError(f"Unknown coupling: {coupling}")
        self.layout = layout
        self.coupling = coupling
        if coupling == CROSS_LINKED:
            self.n_alpha, self.n_beta = layout.rows, layout.cols
            m_var = np.repeat(np.arange(layout.rows), layout.cols)
            n_var = np.tile(np.arange(layout.cols), layout.rows)
        else:
            self.n_alpha = self.n_beta = layout.num_groups
            m_var = n_var = np.arange(layout.num_groups)
        # Variable index of the alpha and beta angle of every grid slot
        self.alpha_var = m_var
        self.beta_var = self.n_alpha + n_var

    @property
    def n_vars(self) -> int:
        return self.n_alpha + self.n_beta

    @property
    def motor_count(self) -> int:
        """Independent rotation drives; one per angle variable"""
        return self.n_vars

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n_vars)

    def slot_angles(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Per-slot (alpha, beta) over the grid, row-major"""
        u = np.asarray(u, dtype=float)
        return u[self.alpha_var], u[self.beta_var]

    def rotation_state(self, u: np.ndarray) -> RotationState:
        """Row/column angles; only meaningful for cross-linked coupling"""
        if self.coupling != CROSS_LINKED:
            raise ValueError("Flexible orientations have no row/column state")
        return RotationState.from_vector(u, self.n_alpha)

    def channel(
        self, scenario: Scenario, u: np.ndarray, pattern: GainPattern
    ) -> np.ndarray:
        raise NotImplementedError

    def constraint_values(self, u: np.ndarray) -> np.ndarray:
        """Exact constraints as g(u) <= 0"""
        raise NotImplementedError

    def incidence(self) -> np.ndarray:
        """Boolean (rows x n_vars) map of which variables each constraint touches"""
        raise NotImplementedError

    def linearized_rows(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Rows (A, b) with A @ du <= b approximating the constraints around u"""
        raise NotImplementedError

    def violation_mask(self, u: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        return self.constraint_values(u) > tol

    def violation_count(self, u: np.ndarray, tol: float = 1e-9) -> int:
        return int(np.count_nonzero(self.violation_mask(u, tol)))

    def is_feasible(self, u: np.ndarray, tol: float = 0.0) -> bool:
        return not np.any(self.violation_mask(u, tol))

    def retract(
        self, u: np.ndarray, min_scale: float = 1e-6, tol: float = 0.0
    ) -> np.ndarray:
        """
        Scale u toward the all-zero state until it is feasible

        Returns u itself when feasible, otherwise the first feasible point of
        u/2, u/4, ...; the zero state once the scale drops below min_scale.
        """
        scale = 1.0
        while scale >= min_scale:
            candidate = scale * np.asarray(u, dtype=float)
            if self.is_feasible(candidate, tol):
                return candidate
            scale *= 0.5
        return self.zeros()

    def describe(self) -> str:
        return f"{self.coupling} {self.layout.describe()} ({self.n_vars} variables)"


class ElementRotation(RotationParameterization):
    """Element-level rotation under the eccentric angle bound"""

    requires_panel = False

    def __init__(
        self, layout: ArrayLayout, theta_max: float, coupling: str = CROSS_LINKED
    ):
        super().__init__(layout, coupling)
        if not 0.0 <= theta_max <= math.pi / 2 + 1e-12:
            raise ValueError("theta_max must lie in [0, pi/2]")
        self.theta_max = float(theta_max)
        self.cos_theta_max = math.cos(self.theta_max)
        self._slack = 2.0 * math.sin(0.5 * self.theta_max) ** 2

    def channel(self, scenario, u, pattern):
        alpha_q, beta_q = self.slot_angles(u)
        return element_channel_from_angles(
            scenario, self.layout, alpha_q, beta_q, pattern
        )

    def constraint_values(self, u):
        """cos(theta_max) - cos(a)cos(b), as tilt minus its allowance"""
        alpha_q, beta_q = self.slot_angles(u)
        return boresight_tilt(alpha_q, beta_q) - self._slack

    def incidence(self):
        rows = np.zeros((self.layout.num_groups, self.n_vars), dtype=bool)
        slots = np.arange(self.layout.num_groups)
        rows[slots, self.alpha_var] = True
        rows[slots, self.beta_var] = True
        return rows

    def linearized_rows(self, u):
        """
        Two-sided bound on the first-order eccentric cosine

        Composing the current rotation with a small increment gives
        cos(a)cos(b) - sin(a) da - cos(a) sin(b) db.
        """
        alpha_q, beta_q = self.slot_angles(u)
        ca, sa = np.cos(alpha_q), np.sin(alpha_q)
        sb = np.sin(beta_q)
        value = ca * np.cos(beta_q)

        count = self.layout.num_groups
        slots = np.arange(count)
        A = np.zeros((2 * count, self.n_vars))
        A[slots, self.alpha_var] = sa
        A[slots, self.beta_var] = ca * sb
        A[count + slots, self.alpha_var] = -sa
        A[count + slots, self.beta_var] = -ca * sb
        b = np.concatenate([value - self.cos_theta_max, 1.0 - value])
        return A, b


class PanelRotation(RotationParameterization):
    """Panel-level rotation under the anti-reflection and CPU-blockage constraints"""

    requires_panel = True

    def __init__(
        self,
        layout: ArrayLayout,
        coupling: str = CROSS_LINKED,
        constrained: bool = True,
    ):
        super().__init__(layout, coupling)
        self.constrained = constrained
        self.m_idx, self.n_idx = layout.grid_indices()
        count = layout.num_groups
        self._pairs = ~np.eye(count, dtype=bool)

    def channel(self, scenario, u, pattern):
        alpha_b, beta_b = self.slot_angles(u)
        return panel_channel_from_angles(
            scenario, self.layout, alpha_b, beta_b, pattern
        )

    def constraint_values(self, u):
        if not self.constrained:
            return np.zeros(0)
        alpha_b, beta_b = self.slot_angles(u)
        pair, cpu = panel_constraint_values(alpha_b, beta_b, self.m_idx, self.n_idx)
        return np.concatenate([pair[self._pairs], -cpu])

    def incidence(self):
        if not self.constrained:
            return np.zeros((0, self.n_vars), dtype=bool)
        count = self.layout.num_groups
        owner = np.concatenate([np.nonzero(self._pairs)[0], np.arange(count)])
        rows = np.zeros((owner.size, self.n_vars), dtype=bool)
        rows[np.arange(owner.size), self.alpha_var[owner]] = True
        rows[np.arange(owner.size), self.beta_var[owner]] = True
        return rows

    def linearized_rows(self, u):
        """
        First-order panel normal n ~ f - db * c2 + da * c3

        c2 and c3 are the second and third columns of the current rotation
        matrix; offsets are taken in panel-grid units.
        """
        if not self.constrained:
            return np.zeros((0, self.n_vars)), np.zeros(0)
        alpha_b, beta_b = self.slot_angles(u)
        ca, sa = np.cos(alpha_b), np.sin(alpha_b)
        cb, sb = np.cos(beta_b), np.sin(beta_b)
        f_y, f_z = -sb, sa * cb
        c2_y, c2_z = cb, sa * sb
        c3_z = ca

        owner, other = np.nonzero(self._pairs)
        dn = self.n_idx[other] - self.n_idx[owner]
        dm = self.m_idx[other] - self.m_idx[owner]
        # Rows for pairs: (c3.d) da - (c2.d) db <= -(f.d)
        pair_a = c3_z[owner] * dm
        pair_b = -(c2_y[owner] * dn + c2_z[owner] * dm)
        pair_rhs = -(f_y[owner] * dn + f_z[owner] * dm)

        # Rows for CPU blockage: -(c3.q) da + (c2.q) db <= f.q
        panels = np.arange(self.layout.num_groups)
        qn, qm = self.n_idx, self.m_idx
        cpu_a = -c3_z * qm
        cpu_b = c2_y * qn + c2_z * qm
        cpu_rhs = f_y * qn + f_z * qm

        owners = np.concatenate([owner, panels])
        coef_a = np.concatenate([pair_a, cpu_a])
        coef_b = np.concatenate([pair_b, cpu_b])
        A = np.zeros((owners.size, self.n_vars))
        rows = np.arange(owners.size)
        np.add.at(A, (rows, self.alpha_var[owners]), coef_a)
        np.add.at(A, (rows, self.beta_var[owners]), coef_b)
        return A, np.concatenate([pair_rhs, cpu_rhs])


def array_wise_layout(rows: int, cols: int, spacing: float) -> ArrayLayout:
    """The whole rows x cols array as a single rotating panel"""
    return ArrayLayout(1, 1, spacing, mode="panel", panel_rows=rows, panel_cols=cols)
