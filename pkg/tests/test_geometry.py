#!/usr/bin/env python3
"""
Tests for array geometry, rotations and feasibility predicates
"""

import math

import numpy as np
import pytest

from clra_sim.model.geometry import (
    ArrayLayout,
    LayoutModeError,
    RotationState,
    analytic_feasible_range,
    antenna_global_position,
    boresight_tilt,
    eccentric_cosine,
    element_bound_satisfied,
    panel_antenna_positions,
    panel_centers,
    panel_constraint_values,
    panel_constraints_satisfied,
    pointing_vectors,
    rotation_factors,
    rotation_matrices,
    rotation_matrix,
    symmetric_indices,
    wrap_angle,
)


@pytest.mark.unit
class TestRotations:
    def test_rotation_matrices_are_proper_rotations(self):
        rng = np.random.default_rng(0)
        alpha = rng.uniform(-math.pi, math.pi, 2000)
        beta = rng.uniform(-math.pi, math.pi, 2000)
        R = rotation_matrices(alpha, beta)

        gram = np.einsum("kji,kjl->kil", R, R)
        assert np.allclose(gram, np.eye(3), atol=1e-12)
        assert np.allclose(np.linalg.det(R), 1.0, atol=1e-12)
        assert np.allclose(np.linalg.norm(R[:, :, 0], axis=1), 1.0, atol=1e-12)

    def test_zero_angles_give_identity(self):
        orientation = rotation_matrix(0.0, 0.0)
        assert np.allclose(orientation.R, np.eye(3))
        assert np.allclose(orientation.f, [1.0, 0.0, 0.0])

    def test_matrix_is_product_of_factors(self):
        r_alpha, r_beta = rotation_factors(0.4, -1.1)
        assert np.allclose(rotation_matrix(0.4, -1.1).R, r_alpha @ r_beta, atol=1e-14)

    def test_pointing_vector_formula(self):
        alpha, beta = 0.3, -0.7
        expected = [
            math.cos(alpha) * math.cos(beta),
            -math.sin(beta),
            math.sin(alpha) * math.cos(beta),
        ]
        assert np.allclose(pointing_vectors(alpha, beta), expected)
        assert np.allclose(rotation_matrix(alpha, beta).f, expected)

    def test_alpha_tilts_towards_z(self):
        f = rotation_matrix(math.pi / 2, 0.0).f
        assert np.allclose(f, [0.0, 0.0, 1.0], atol=1e-15)

    def test_wrap_angle(self):
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
        assert wrap_angle(0.5) == pytest.approx(0.5)
        assert wrap_angle(-0.5 - 2 * math.pi) == pytest.approx(-0.5)


@pytest.mark.unit
class TestLayout:
    def test_symmetric_indices(self):
        assert np.allclose(symmetric_indices(4), [-1.5, -0.5, 0.5, 1.5])
        assert np.allclose(symmetric_indices(3), [-1.0, 0.0, 1.0])
        assert np.allclose(symmetric_indices(1), [0.0])

    def test_element_positions_row_major(self):
        layout = ArrayLayout(2, 2, 0.5)
        positions = layout.element_positions()
        assert positions.shape == (4, 3)
        assert np.allclose(positions[0], [0.0, -0.25, -0.25])
        assert np.allclose(positions[1], [0.0, 0.25, -0.25])
        assert np.allclose(positions[2], [0.0, -0.25, 0.25])

    def test_antenna_counts(self, element_layout, panel_layout):
        assert element_layout.num_antennas == 6
        assert panel_layout.num_panels == 4
        assert panel_layout.antennas_per_panel == 4
        assert panel_layout.num_antennas == 16

    def test_panel_centres_use_panel_pitch(self, panel_layout):
        centers = panel_centers(panel_layout)
        pitch = panel_layout.panel_pitch
        assert pitch == pytest.approx(2 * panel_layout.spacing)
        assert np.allclose(centers[0], [0.0, -0.5 * pitch, -0.5 * pitch])
        assert np.allclose(centers[3], [0.0, 0.5 * pitch, 0.5 * pitch])

    def test_unrotated_panels_tile_the_plane(self, panel_layout):
        R = np.repeat(np.eye(3)[None], panel_layout.num_panels, axis=0)
        positions = panel_antenna_positions(panel_layout, R)
        assert positions.shape == (16, 3)
        assert np.allclose(positions[:, 0], 0.0)
        # 4 x 4 distinct sites on the spacing grid
        spacing = panel_layout.spacing
        sites = {
            (round(y / spacing, 6), round(z / spacing, 6)) for _, y, z in positions
        }
        assert len(sites) == 16

    def test_antenna_global_position(self, panel_layout):
        quarter_turn = np.array(
            [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]
        )
        position = antenna_global_position(
            [0.0, 1.0, 2.0], quarter_turn, [0.0, 1.0, 0.0]
        )
        assert np.allclose(position, [0.0, 1.0, 3.0])

        R = np.repeat(quarter_turn[None], panel_layout.num_panels, axis=0)
        positions = panel_antenna_positions(panel_layout, R)
        first = antenna_global_position(
            panel_centers(panel_layout)[0],
            quarter_turn,
            panel_layout.local_offsets()[0],
        )
        assert np.allclose(positions[0], first)

    def test_element_positions_need_element_layout(self, panel_layout):
        with pytest.raises(LayoutModeError):
            panel_layout.element_positions()

    def test_invalid_layout(self):
        with pytest.raises(ValueError):
            ArrayLayout(0, 2, 0.1)
        with pytest.raises(ValueError):
            ArrayLayout(2, 2, 0.1, mode="ring")


@pytest.mark.unit
class TestElementBound:
    def test_eccentric_cosine(self):
        state = RotationState(np.array([0.3, -0.2]), np.array([0.4]))
        expected = math.cos(0.3) * math.cos(0.4)
        assert eccentric_cosine(state, 0, 0) == pytest.approx(expected)

    @pytest.mark.parametrize("shift", [2 * math.pi, -2 * math.pi, 4 * math.pi])
    def test_eccentric_cosine_ignores_full_turns(self, shift):
        state = RotationState(np.array([0.3, -0.2]), np.array([0.4, 1.1]))
        turned_alpha = RotationState(state.alpha + shift, state.beta)
        turned_beta = RotationState(state.alpha, state.beta + shift)
        for m in range(2):
            for n in range(2):
                expected = eccentric_cosine(state, m, n)
                assert eccentric_cosine(turned_alpha, m, n) == pytest.approx(expected)
                assert eccentric_cosine(turned_beta, m, n) == pytest.approx(expected)

    def test_eccentric_cosine_index_errors(self):
        state = RotationState.zeros(2, 2)
        with pytest.raises(ValueError):
            eccentric_cosine(state, 2, 0)
        with pytest.raises(ValueError):
            eccentric_cosine(state, 0, -1)

    def test_boresight_tilt_small_angles(self):
        assert boresight_tilt(1e-8, 0.0) == pytest.approx(5e-17, rel=1e-6)
        assert boresight_tilt(0.0, -1e-8) == pytest.approx(5e-17, rel=1e-6)
        alpha, beta = np.array([0.3, -1.1]), np.array([0.7, 0.2])
        expected = 1.0 - np.cos(alpha) * np.cos(beta)
        assert np.allclose(boresight_tilt(alpha, beta), expected, atol=1e-15)

    def test_tiny_rotation_breaks_zero_limit(self):
        state = RotationState(np.array([1e-9]), np.array([0.0]))
        assert not element_bound_satisfied(state, 0.0, tol=0.0).any()

    def test_zero_state_always_satisfies_bound(self):
        state = RotationState.zeros(3, 4)
        assert element_bound_satisfied(state, 0.0).all()

    def test_bound_mask(self):
        theta = math.pi / 6
        state = RotationState(np.array([0.0, 0.5]), np.array([0.0, 0.2]))
        mask = element_bound_satisfied(state, theta)
        assert mask.shape == (2, 2)
        assert mask[0, 0] and mask[0, 1]
        # cos(0.5) cos(0.2) < cos(pi/6)
        assert mask[1, 0] == (math.cos(0.5) >= math.cos(theta))
        assert not mask[1, 1]

    def test_vacuous_bound(self):
        state = RotationState(np.array([1.2, -1.4]), np.array([0.9]))
        assert element_bound_satisfied(state, math.pi / 2).all()

    def test_state_vector_round_trip(self):
        state = RotationState(np.array([0.1, 0.2]), np.array([0.3, 0.4, 0.5]))
        restored = RotationState.from_vector(state.as_vector(), 2)
        assert np.allclose(restored.alpha, state.alpha)
        assert np.allclose(restored.beta, state.beta)

    def test_expand_is_row_major(self):
        state = RotationState(np.array([0.1, 0.2]), np.array([0.3, 0.4, 0.5]))
        alpha_q, beta_q = state.expand()
        assert np.allclose(alpha_q, [0.1, 0.1, 0.1, 0.2, 0.2, 0.2])
        assert np.allclose(beta_q, [0.3, 0.4, 0.5, 0.3, 0.4, 0.5])


@pytest.mark.unit
class TestPanelConstraints:
    def test_zero_state_is_feasible(self, panel_layout):
        zeros = RotationState.zeros(2, 2)
        ok, violations = panel_constraints_satisfied(zeros, panel_layout)
        assert ok
        assert violations == []

    def test_facing_a_neighbour_violates_anti_reflection(self, panel_layout):
        # Column 0 turned towards +y, where column 1 sits
        state = RotationState(np.zeros(2), np.array([-0.3, 0.0]))
        ok, violations = panel_constraints_satisfied(state, panel_layout)
        assert not ok
        assert any(v.kind == "anti_reflection" for v in violations)

    def test_turning_away_is_feasible(self, panel_layout):
        # Column 0 (left, -y) turns towards -y, column 1 towards +y
        state = RotationState(np.zeros(2), np.array([0.3, -0.3]))
        ok, _ = panel_constraints_satisfied(state, panel_layout)
        assert ok

    def test_needs_panel_layout(self, element_layout):
        with pytest.raises(LayoutModeError):
            panel_constraints_satisfied(RotationState.zeros(2, 3), element_layout)

    def test_analytic_ranges_of_corner_and_interior(self):
        layout = ArrayLayout(3, 3, 0.04, mode="panel", panel_rows=2, panel_cols=2)
        corner = analytic_feasible_range(layout, 0)
        assert (corner.y_sign, corner.z_sign) == ("le0", "le0")
        assert analytic_feasible_range(layout, 4).boresight_only
        edge = analytic_feasible_range(layout, 5)
        assert (edge.y_sign, edge.z_sign) == ("ge0", "eq0")

    def test_single_panel_is_free(self):
        layout = ArrayLayout(1, 1, 0.04, mode="panel", panel_rows=4, panel_cols=4)
        assert analytic_feasible_range(layout, 0).contains(1.0, -1.0)

    def test_interior_range_rejects_backward_normal(self):
        layout = ArrayLayout(3, 3, 0.04, mode="panel", panel_rows=2, panel_cols=2)
        interior = analytic_feasible_range(layout, 4)
        assert interior.contains(0.0, 0.0)
        # y = z = 0 but the normal points along -x
        assert not interior.contains(math.pi, 0.0)
        assert not analytic_feasible_range(layout, 0).contains(math.pi, 0.0)

    def test_analytic_range_matches_direct_evaluation(self):
        layout = ArrayLayout(2, 3, 0.04, mode="panel", panel_rows=2, panel_cols=2)
        rng = np.random.default_rng(3)
        for b in range(layout.num_panels):
            feasible_range = analytic_feasible_range(layout, b)
            for _ in range(300):
                alpha_b = np.zeros(layout.num_panels)
                beta_b = np.zeros(layout.num_panels)
                alpha_b[b], beta_b[b] = rng.uniform(-1.5, 1.5, 2)
                state_ok = _owned_constraints_hold(layout, alpha_b, beta_b, b)
                contained = feasible_range.contains(alpha_b[b], beta_b[b], tol=0.0)
                assert state_ok == contained

    def test_analytic_range_rejects_element_layout(self, element_layout):
        with pytest.raises(LayoutModeError):
            analytic_feasible_range(element_layout, 0)


def _owned_constraints_hold(layout, alpha_b, beta_b, panel):
    """Direct check of the constraints owned by one panel"""
    m_idx, n_idx = layout.grid_indices()
    pair, cpu = panel_constraint_values(alpha_b, beta_b, m_idx, n_idx)
    others = np.arange(layout.num_panels) != panel
    return bool(np.all(pair[panel, others] <= 0.0) and cpu[panel] >= 0.0)
