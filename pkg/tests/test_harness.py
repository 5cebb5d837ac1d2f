#!/usr/bin/env python3
"""
Tests for scheme dispatch, scenario generation and parameter sweeps
"""

import math
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from clra_sim.core.config import ConfigError
from clra_sim.core.utils import dbm_to_watts
from clra_sim.model.geometry import LayoutModeError
from clra_sim.optim.parameterization import ElementRotation
from clra_sim.services.experiment_service import (
    SCHEME_TABLE,
    ExperimentService,
    ResultRow,
    apply_sweep_value,
    generate_scenario,
    layout_for_scheme,
    motor_count,
    parse_array_size,
    run_scheme,
    summarize,
)


@pytest.mark.unit
class TestScenarioGeneration:
    def test_same_trial_same_scenario(self, small_config):
        first = generate_scenario(small_config, 3)
        second = generate_scenario(small_config, 3)
        assert np.array_equal(first.user_positions, second.user_positions)
        assert np.array_equal(first.cluster_positions, second.cluster_positions)
        assert np.array_equal(first.cluster_phases, second.cluster_phases)
        assert first.seed == second.seed

    def test_trials_differ(self, small_config):
        first = generate_scenario(small_config, 0)
        second = generate_scenario(small_config, 1)
        assert not np.allclose(first.user_positions, second.user_positions)

    def test_drop_regions(self, small_config):
        scenario = generate_scenario(replace(small_config, num_users=40), 0)
        xy = scenario.user_positions[:, :2]
        horizontal = np.hypot(xy[:, 0], xy[:, 1])
        assert np.all(scenario.user_positions[:, 0] > 0)
        assert np.all((horizontal >= 50.0) & (horizontal <= 70.0))
        assert scenario.num_clusters == small_config.num_clusters


@pytest.mark.unit
class TestSweepValues:
    def test_parse_array_size(self):
        assert parse_array_size("4x8") == (4, 8)
        assert parse_array_size(16) == (4, 4)
        assert parse_array_size("64") == (8, 8)
        with pytest.raises(ConfigError):
            parse_array_size("15")
        with pytest.raises(ConfigError):
            parse_array_size("big")

    def test_scalar_sweeps(self, small_config):
        assert apply_sweep_value(small_config, "power", "15").power_dbm == 15.0
        swept = apply_sweep_value(small_config, "theta_max", 45)
        assert swept.theta_max_rad == pytest.approx(math.pi / 4)
        assert apply_sweep_value(small_config, "p", 4).directivity == 4.0
        assert apply_sweep_value(small_config, "K", "3").num_users == 3
        assert apply_sweep_value(small_config, "L", 9.0).grid_levels == 9
        assert small_config.power_dbm == 10.0

    def test_array_sweep_resizes_panels(self, small_config):
        updated = apply_sweep_value(small_config, "Q", "4x4")
        assert (updated.rows, updated.cols) == (4, 4)
        assert (updated.panel_rows, updated.panel_cols) == (2, 4)

    def test_array_sweep_must_split_into_panels(self, small_config):
        with pytest.raises(ConfigError):
            apply_sweep_value(small_config, "Q", "3x3")
        element_only = replace(small_config, mode="element")
        assert apply_sweep_value(element_only, "Q", "3x3").rows == 3

    def test_unknown_sweep_variable(self, small_config):
        with pytest.raises(ConfigError):
            apply_sweep_value(small_config, "noise", 1)


@pytest.mark.unit
class TestSchemeLayouts:
    def test_every_config_scheme_has_a_table_entry(self):
        from clra_sim.core.config import SCHEMES

        assert set(SCHEMES) == set(SCHEME_TABLE)

    def test_mode_mismatch(self, small_config):
        element_only = replace(small_config, mode="element")
        with pytest.raises(LayoutModeError):
            layout_for_scheme(element_only, "cl_panel")
        with pytest.raises(LayoutModeError):
            layout_for_scheme(replace(small_config, mode="panel"), "cl_element")

    def test_fixed_follows_configured_mode(self, small_config):
        assert not layout_for_scheme(small_config, "fixed").is_panel
        assert layout_for_scheme(replace(small_config, mode="panel"), "fixed").is_panel

    def test_array_wise_is_one_big_panel(self, small_config):
        layout = layout_for_scheme(small_config, "array_wise")
        assert layout.num_panels == 1
        assert (layout.panel_rows, layout.panel_cols) == (2, 2)

    def test_motor_counts(self, small_config):
        counts = {
            scheme: motor_count(layout_for_scheme(small_config, scheme), scheme)
            for scheme in (
                "cl_element",
                "flexible_element",
                "cl_panel",
                "array_wise",
                "fixed",
            )
        }
        assert counts == {
            "cl_element": 4,
            "flexible_element": 8,
            "cl_panel": 3,
            "array_wise": 2,
            "fixed": 0,
        }

    def test_service_rejects_incompatible_schemes(self, small_config):
        config = replace(
            small_config, mode="element", schemes=["cl_element", "cl_panel"]
        )
        with pytest.raises(LayoutModeError):
            ExperimentService(config)


@pytest.mark.integration
class TestRunScheme:
    def test_zero_rotation_limit_matches_fixed(self, small_config):
        config = replace(small_config, theta_max_rad=0.0)
        scenario = generate_scenario(config, 0)
        rotated = run_scheme("cl_element", scenario, config)
        fixed = run_scheme("fixed", scenario, config)
        assert rotated.report.sum_rate == pytest.approx(fixed.report.sum_rate, abs=1e-9)
        assert np.array_equal(rotated.u, np.zeros(4))

    def test_rotation_does_not_lose_rate(self, small_config):
        scenario = generate_scenario(small_config, 1)
        fixed = run_scheme("fixed", scenario, small_config)
        for scheme in ("cl_element", "cl_panel"):
            outcome = run_scheme(scheme, scenario, small_config)
            if scheme == "cl_panel":
                panel_config = replace(small_config, mode="panel")
                baseline = run_scheme("fixed", scenario, panel_config)
            else:
                baseline = fixed
            assert outcome.report.sum_rate >= baseline.report.sum_rate - 1e-9

    def test_isotropic_differs_from_directional(self, small_config):
        scenario = generate_scenario(small_config, 0)
        isotropic = run_scheme("isotropic", scenario, small_config)
        directional = run_scheme("fixed", scenario, small_config)
        assert isotropic.report.sum_rate != pytest.approx(directional.report.sum_rate)

    def test_random_orientation_is_feasible_and_seeded(self, small_config):
        scenario = generate_scenario(small_config, 0)
        first = run_scheme("random_orientation", scenario, small_config, seed=5)
        second = run_scheme("random_orientation", scenario, small_config, seed=5)
        layout = layout_for_scheme(small_config, "random_orientation")
        param = ElementRotation(layout, small_config.theta_max_rad, "flexible")
        assert param.is_feasible(first.u, 0.0)
        assert np.array_equal(first.u, second.u)

    def test_discrete_schemes(self, small_config):
        config = replace(small_config, ga_population=40)
        scenario = generate_scenario(config, 0)
        ga = run_scheme("ga_element", scenario, config, seed=2)
        assert ga.feasible
        assert ga.iterations == config.ga_generations
        projected = run_scheme("nearest_projection", scenario, small_config)
        param = ElementRotation(
            layout_for_scheme(small_config, "nearest_projection"),
            small_config.theta_max_rad,
        )
        assert param.is_feasible(projected.u, 1e-9)

    def test_layout_override_is_checked(self, small_config, panel_layout):
        scenario = generate_scenario(small_config, 0)
        with pytest.raises(LayoutModeError):
            run_scheme("cl_element", scenario, small_config, layout=panel_layout)


@pytest.mark.unit
class TestSummary:
    def _row(self, scheme, value, trial, rate):
        return ResultRow(scheme, "power", value, trial, 0, rate, 0, 0, [rate])

    def test_statistics_and_gain(self):
        rows = [
            self._row("fixed", "10", 0, 1.0),
            self._row("fixed", "10", 1, 3.0),
            self._row("cl_element", "10", 0, 2.0),
            self._row("cl_element", "10", 1, 4.0),
        ]
        summary = summarize(rows).set_index("scheme")
        assert summary.loc["fixed", "mean"] == pytest.approx(2.0)
        assert summary.loc["cl_element", "trials"] == 2
        assert summary.loc["cl_element", "ci95"] == pytest.approx(1.96)
        assert summary.loc["cl_element", "gain_vs_fixed_pct"] == pytest.approx(50.0)
        assert summary.loc["fixed", "gain_vs_fixed_pct"] == pytest.approx(0.0)

    def test_single_trial_has_zero_spread(self):
        summary = summarize([self._row("cl_element", "default", 0, 5.0)])
        assert summary["std"].iloc[0] == 0.0
        assert summary["ci95"].iloc[0] == 0.0
        assert "gain_vs_fixed_pct" not in summary.columns

    def test_empty(self):
        assert summarize([]).empty

    def test_row_formatting(self):
        row = ResultRow("fixed", "none", "default", 0, 9, 1.5, 0, 0, [0.5, 1.0])
        record = row.to_dict()
        assert record["sum_rate_bps_hz"] == "1.5000000000"
        assert record["seed"] == 9


@pytest.mark.integration
class TestSweeps:
    def test_power_sweep_rows(self, small_config, tmp_path):
        config = replace(
            small_config,
            schemes=["cl_element", "fixed"],
            sweep_var="power",
            sweep_values=[0, 10, 20],
            output_file=str(tmp_path / "power.csv"),
        )
        result = ExperimentService(config).run_sweep()
        assert len(result.rows) == 2 * 3 * config.trials
        assert [r.scheme for r in result.rows[:6]] == ["cl_element"] * 6
        values = [r.sweep_value for r in result.rows[:6]]
        assert values == ["0", "0", "10", "10", "20", "20"]
        assert all(r.wall_ms == 0 for r in result.rows)
        assert len(result.summary) == 6
        assert result.motor_counts == {"cl_element": 4, "fixed": 0}

    def test_rate_grows_with_power(self, small_config):
        config = replace(
            small_config, schemes=["fixed"], sweep_var="power", sweep_values=[-10, 30]
        )
        summary = ExperimentService(config).run_sweep().summary
        low, high = summary["mean"].tolist()
        assert high > low

    def test_csv_is_reproducible(self, small_config, tmp_path):
        outputs = []
        for name in ("first.csv", "second.csv"):
            config = replace(small_config, output_file=str(tmp_path / name))
            service = ExperimentService(config)
            service.save(service.run_sweep())
            outputs.append((tmp_path / name).read_bytes())
        assert outputs[0] == outputs[1]

        frame = pd.read_csv(tmp_path / "first.csv")
        leading = list(frame.columns[:4])
        assert leading == ["scheme", "sweep_var", "sweep_value", "trial"]
        assert len(frame) == 2 * small_config.trials

    def test_summary_file(self, small_config, tmp_path):
        config = replace(
            small_config,
            output_file=str(tmp_path / "rows.csv"),
            summary_file=str(tmp_path / "summary.csv"),
        )
        ExperimentService(config).run()
        summary = pd.read_csv(tmp_path / "summary.csv")
        assert set(summary["scheme"]) == {"cl_element", "fixed"}
        assert {"mean", "std", "trials", "ci95"} <= set(summary.columns)

    def test_fixed_scenario_follows_user_sweep(self, small_config, small_scenario):
        config = replace(
            small_config, schemes=["fixed"], sweep_var="K", sweep_values=[1, 2]
        )
        rows = ExperimentService(config).run_sweep(small_scenario).rows
        assert [len(r.user_rates) for r in rows] == [1, 1, 2, 2]

    def test_fixed_scenario_keeps_file_powers(self, small_config, small_scenario):
        powers = dbm_to_watts(np.array([0.0, 20.0, 10.0]))
        scenario = replace(small_scenario, user_powers_w=powers)
        config = replace(small_config, schemes=["fixed"], trials=1)
        rows = ExperimentService(config).run_sweep(scenario).rows
        assert len(rows[0].user_rates) == 3
        expected = run_scheme("fixed", scenario, config).report.sum_rate
        assert rows[0].sum_rate_bps_hz == pytest.approx(expected, abs=1e-9)
        equalized = scenario.with_powers(dbm_to_watts(config.power_dbm))
        flattened = run_scheme("fixed", equalized, config).report.sum_rate
        assert rows[0].sum_rate_bps_hz != pytest.approx(flattened, abs=1e-6)

    def test_power_sweep_overrides_file_powers(self, small_config, small_scenario):
        powers = dbm_to_watts(np.array([0.0, 20.0, 10.0]))
        scenario = replace(small_scenario, user_powers_w=powers)
        config = replace(
            small_config,
            schemes=["fixed"],
            trials=1,
            sweep_var="power",
            sweep_values=[5],
        )
        rows = ExperimentService(config).run_sweep(scenario).rows
        swept = scenario.with_powers(dbm_to_watts(5.0))
        expected = run_scheme("fixed", swept, config).report.sum_rate
        assert rows[0].sum_rate_bps_hz == pytest.approx(expected, abs=1e-9)

    def test_user_sweep_beyond_scenario_file(self, small_config, small_scenario):
        config = replace(
            small_config, schemes=["fixed"], sweep_var="K", sweep_values=[2, 4]
        )
        with pytest.raises(ConfigError, match="exceed the 3 users"):
            ExperimentService(config).run_sweep(small_scenario)


@pytest.mark.slow
@pytest.mark.integration
class TestTrends:
    """Scheme ordering at desk scale (4 users, 4 x 4 array)"""

    @pytest.fixture
    def desk_config(self, small_config):
        return replace(
            small_config,
            rows=4,
            cols=4,
            panel_grid_rows=2,
            panel_grid_cols=2,
            panel_rows=2,
            panel_cols=2,
            num_users=4,
            num_clusters=4,
            trials=8,
            inner_max_iter=40,
            outer_max_iter=10,
        )

    def _rates(self, config, scheme):
        return np.array(
            [
                run_scheme(scheme, generate_scenario(config, trial), config)
                .report.sum_rate
                for trial in range(config.trials)
            ]
        )

    def test_scheme_ordering(self, desk_config):
        rates = {
            scheme: self._rates(desk_config, scheme)
            for scheme in ("flexible_element", "cl_element", "cl_panel", "fixed")
        }
        # Unrotated full panels and the plain array see the same channel
        assert np.all(rates["cl_panel"] >= rates["fixed"] - 1e-9)
        assert np.all(rates["cl_element"] >= rates["fixed"] - 1e-9)

        order = ["flexible_element", "cl_element", "cl_panel"]
        for upper, lower in zip(order, order[1:]):
            diff = rates[upper] - rates[lower]
            standard_error = diff.std(ddof=1) / math.sqrt(diff.size)
            assert diff.mean() >= -standard_error

    def test_zero_rotation_limit_collapses_element_schemes(self, desk_config):
        config = replace(desk_config, theta_max_rad=0.0, trials=3)
        fixed = self._rates(config, "fixed")
        for scheme in ("cl_element", "flexible_element", "random_orientation"):
            assert np.allclose(self._rates(config, scheme), fixed, rtol=0, atol=1e-9)
