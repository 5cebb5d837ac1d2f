#!/usr/bin/env python3
"""
Tests for the command-line interface and the validation suites
"""

import csv
import json

import pytest

from clra_sim.cli.main import main as cli_entry
from clra_sim.cli.runner import build_parser, main
from clra_sim.validation.invariants import InvariantValidator, print_validation_report

SMALL = {
    "rows": 2,
    "cols": 2,
    "panel_grid_rows": 2,
    "panel_grid_cols": 1,
    "panel_rows": 1,
    "panel_cols": 2,
    "num_users": 2,
    "num_clusters": 2,
    "trials": 1,
    "inner_max_iter": 10,
    "outer_max_iter": 3,
    "ga_population": 10,
    "ga_generations": 3,
    "grid_levels": 5,
}


@pytest.fixture
def config_file(tmp_path, monkeypatch):
    for name in (
        "CLRA_SEED",
        "CLRA_TRIALS",
        "CLRA_THREADS",
        "CLRA_OUTPUT",
        "CLRA_VERBOSE",
    ):
        monkeypatch.delenv(name, raising=False)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL), encoding="utf-8")
    return str(path)


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


@pytest.mark.unit
class TestParser:
    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_repeatable_scheme(self):
        args = build_parser().parse_args(
            ["run", "--scheme", "fixed", "--scheme", "cl_element"]
        )
        assert args.scheme == ["fixed", "cl_element"]

    def test_unknown_scheme_rejected(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["run", "--scheme", "beam_squint"])

    def test_sweep_values(self):
        args = build_parser().parse_args(
            ["sweep", "--sweep-var", "Q", "--values", "2x2", "4x4"]
        )
        assert args.sweep_var == "Q"
        assert args.values == ["2x2", "4x4"]


@pytest.mark.integration
class TestCommands:
    def test_run_writes_csv(self, config_file, tmp_path):
        out = tmp_path / "rows.csv"
        status = main(
            ["run", "--config", config_file, "--out", str(out), "--no-timing"]
        )
        assert status == 0
        rows = read_rows(out)
        assert [r["scheme"] for r in rows] == ["cl_element", "fixed"]
        assert all(r["wall_ms"] == "0" for r in rows)
        assert all(r["sweep_value"] == "default" for r in rows)

    def test_sweep_with_summary(self, config_file, tmp_path):
        out, summary = tmp_path / "rows.csv", tmp_path / "summary.csv"
        status = main(
            [
                "sweep",
                "--config", config_file,
                "--sweep-var", "theta_max",
                "--values", "0", "30",
                "--scheme", "cl_element",
                "--scheme", "fixed",
                "--out", str(out),
                "--summary", str(summary),
            ]
        )
        assert status == 0
        assert len(read_rows(out)) == 4
        assert len(read_rows(summary)) == 4

    def test_ga_defaults_to_discrete_schemes(self, config_file, tmp_path):
        out = tmp_path / "ga.csv"
        argv = ["ga", "--config", config_file, "--levels", "3", "--out", str(out)]
        assert main(argv) == 0
        schemes = {r["scheme"] for r in read_rows(out)}
        assert schemes == {"ga_element", "nearest_projection"}

    def test_sweep_without_variable_is_a_config_error(self, config_file, capsys):
        assert main(["sweep", "--config", config_file]) == 1
        assert "Configuration error" in capsys.readouterr().out

    def test_bad_levels(self, config_file):
        assert main(["ga", "--config", config_file, "--levels", "0"]) == 1

    def test_mode_mismatch_exits_nonzero(self, config_file):
        with pytest.raises(SystemExit) as exit_info:
            cli_entry(
                [
                    "run",
                    "--config",
                    config_file,
                    "--mode",
                    "element",
                    "--scheme",
                    "cl_panel",
                ]
            )
        assert exit_info.value.code == 1

    def test_missing_config_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "absent.json")]) == 1


@pytest.mark.unit
class TestValidationSuites:
    def test_quick_suites_pass(self, capsys):
        validator = InvariantValidator(seed=3, scale=0.01)
        results = [
            validator.check_rotation_matrices(),
            validator.check_gain_normalization(),
            validator.check_woodbury(),
            validator.check_lp_solver(),
            validator.check_feasible_ranges(),
        ]
        assert all(r["passed"] for r in results), results
        print_validation_report(results)
        assert "5/5 suites passed" in capsys.readouterr().out

    @pytest.mark.slow
    def test_single_user_oracle_suite(self):
        result = InvariantValidator(seed=3, scale=0.1).check_single_user_oracle()
        assert result["passed"], result
