#!/usr/bin/env python3
"""
Experiment Service for the CL-RA simulator

Builds scenarios from the configuration, dispatches every scheme to the
optimizers, runs Monte-Carlo parameter sweeps and aggregates the results
into CSV rows and a summary table.
"""

import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..core.config import ConfigError, ExperimentConfig
from ..core.utils import (
    dbm_to_watts,
    format_user_rates,
    log_message,
    print_progress,
    print_sweep_summary,
    save_results_to_csv,
    substream_rng,
    substream_seed,
)
from ..model.channel import (
    GainPattern,
    Scenario,
    draw_cluster_phases,
    draw_front_positions,
)
from ..model.geometry import ArrayLayout, LayoutModeError
from ..model.scenario_io import CLUSTER_STREAM, PHASE_STREAM
from ..optim.beamforming import RateReport, mmse_sum_rate
from ..optim.discrete_ga import AngleGrid, nearest_projection, run_ga
from ..optim.parameterization import (
    CROSS_LINKED,
    FLEXIBLE,
    ElementRotation,
    PanelRotation,
    RotationParameterization,
    array_wise_layout,
)
from ..optim.rotation_opt import alternating_optimize

USER_STREAM = 0
RANDOM_STREAM = 3

ANY_MODE = "any"


@dataclass(frozen=True)
class SchemeSpec:
    """How a named scheme is evaluated"""

    name: str
    mode: str
    method: str
    coupling: str = CROSS_LINKED
    constrained: bool = True
    array_wise: bool = False
    directivity: Optional[float] = None


SCHEME_TABLE: Dict[str, SchemeSpec] = {
    spec.name: spec
    for spec in (
        SchemeSpec("cl_element", "element", "ao"),
        SchemeSpec("flexible_element", "element", "ao", FLEXIBLE),
        SchemeSpec("cl_panel", "panel", "ao"),
        SchemeSpec("cl_panel_unconstrained", "panel", "ao", constrained=False),
        SchemeSpec("flexible_panel", "panel", "ao", FLEXIBLE),
        SchemeSpec(
            "flexible_panel_unconstrained", "panel", "ao", FLEXIBLE, constrained=False
        ),
        SchemeSpec("array_wise", "panel", "ao", array_wise=True),
        SchemeSpec("random_orientation", "element", "random", FLEXIBLE),
        SchemeSpec("fixed", ANY_MODE, "fixed"),
        SchemeSpec("isotropic", ANY_MODE, "fixed", directivity=0.0),
        SchemeSpec("ga_element", "element", "ga"),
        SchemeSpec("ga_panel", "panel", "ga"),
        SchemeSpec("nearest_projection", "element", "projection"),
    )
}


@dataclass
class ResultRow:
    """One (scheme, sweep value, trial) outcome"""

    scheme: str
    sweep_var: str
    sweep_value: str
    trial: int
    seed: int
    sum_rate_bps_hz: float
    iters: int
    wall_ms: int
    user_rates: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """CSV-ready row with fixed numeric formatting"""
        return {
            "scheme": self.scheme,
            "sweep_var": self.sweep_var,
            "sweep_value": self.sweep_value,
            "trial": self.trial,
            "seed": self.seed,
            "sum_rate_bps_hz": f"{self.sum_rate_bps_hz:.10f}",
            "iters": self.iters,
            "wall_ms": self.wall_ms,
            "user_rates": format_user_rates(self.user_rates),
        }


@dataclass
class SchemeOutcome:
    """Rates and final angles of one scheme evaluation"""

    report: RateReport
    u: np.ndarray
    iterations: int
    feasible: bool = True


@dataclass
class SweepResult:
    rows: List[ResultRow]
    summary: pd.DataFrame
    motor_counts: Dict[str, int]
    sweep_var: str


def build_layout(config: ExperimentConfig, mode: str) -> ArrayLayout:
    """Element grid, or panel grid with its per-panel antenna block"""
    if mode == "element":
        return ArrayLayout(
            config.rows,
            config.cols,
            config.spacing_m,
            mode="element",
            occupation_ratio=config.occupation_ratio,
        )
    if mode == "panel":
        return ArrayLayout(
            config.panel_grid_rows,
            config.panel_grid_cols,
            config.spacing_m,
            mode="panel",
            panel_rows=config.panel_rows,
            panel_cols=config.panel_cols,
            occupation_ratio=config.occupation_ratio,
        )
    raise ValueError(f"Unknown layout mode: {mode}")


def layout_for_scheme(config: ExperimentConfig, scheme: str) -> ArrayLayout:
    """
    Layout a scheme runs on under the configured mode

    Raises:
        LayoutModeError: If the scheme needs a mode the config excludes
    """
    spec = _spec(scheme)
    if spec.mode == ANY_MODE:
        mode = "panel" if config.mode == "panel" else "element"
    elif config.mode in (spec.mode, "both"):
        mode = spec.mode
    else:
        raise LayoutModeError(
            f"Scheme {scheme} needs {spec.mode} mode, config has {config.mode}"
        )

    if spec.array_wise:
        return array_wise_layout(
            config.panel_grid_rows * config.panel_rows,
            config.panel_grid_cols * config.panel_cols,
            config.spacing_m,
        )
    return build_layout(config, mode)


def _spec(scheme: str) -> SchemeSpec:
    if scheme not in SCHEME_TABLE:
        raise ValueError(f"Unknown scheme: {scheme}")
    return SCHEME_TABLE[scheme]


def parameterization_for(
    scheme: str, layout: ArrayLayout, theta_max: float
) -> RotationParameterization:
    """Rotation variables a scheme optimises over"""
    spec = _spec(scheme)
    if layout.is_panel:
        return PanelRotation(layout, spec.coupling, spec.constrained)
    return ElementRotation(layout, theta_max, spec.coupling)


def motor_count(
    layout: ArrayLayout, scheme: str, theta_max: float = math.pi / 6
) -> int:
    """Independent rotation drives a scheme needs (0 for fixed orientations)"""
    if _spec(scheme).method == "fixed":
        return 0
    return parameterization_for(scheme, layout, theta_max).motor_count


def generate_scenario(config: ExperimentConfig, trial: int) -> Scenario:
    """
    Users and clusters of one Monte-Carlo trial

    The trial seed is derived from the master seed and the trial index;
    users, cluster positions and cluster phases draw from separate
    substreams of it.
    """
    seed = substream_seed(config.seed, trial)
    users = draw_front_positions(
        substream_rng(seed, USER_STREAM),
        config.num_users,
        config.user_distance_min_m,
        config.user_distance_max_m,
        config.user_height_m,
    )
    clusters = draw_front_positions(
        substream_rng(seed, CLUSTER_STREAM),
        config.num_clusters,
        config.cluster_distance_min_m,
        config.cluster_distance_max_m,
        config.cluster_height_m,
    )
    return Scenario(
        user_positions=users,
        user_powers_w=np.full(config.num_users, dbm_to_watts(config.power_dbm)),
        cluster_positions=clusters,
        cluster_rcs=np.full(config.num_clusters, config.rcs_m2),
        cluster_phases=draw_cluster_phases(
            substream_rng(seed, PHASE_STREAM), config.num_clusters
        ),
        noise_w=dbm_to_watts(config.noise_dbm),
        wavelength_m=config.wavelength_m,
        seed=seed,
    )


def parse_array_size(value: Any) -> Tuple[int, int]:
    """'MxN' or a perfect square Q as (M, N)"""
    text = str(value).strip().lower()
    match = re.fullmatch(r"(\d+)\s*x\s*(\d+)", text)
    if match:
        return int(match.group(1)), int(match.group(2))
    try:
        count = int(float(text))
    except ValueError as e:
        raise ConfigError(f"Invalid array size: {value}") from e
    side = math.isqrt(count)
    if side < 1 or side * side != count:
        raise ConfigError(f"Array size {value} is not MxN or a perfect square")
    return side, side


def apply_sweep_value(
    config: ExperimentConfig, sweep_var: str, value: Any
) -> ExperimentConfig:
    """
    Copy of config with the swept parameter set to value

    theta_max values are in degrees and power values in dBm.
    """
    if sweep_var == "power":
        return replace(config, power_dbm=float(value))
    if sweep_var == "theta_max":
        return replace(config, theta_max_rad=math.radians(float(value)))
    if sweep_var == "p":
        return replace(config, directivity=float(value))
    if sweep_var == "K":
        return replace(config, num_users=int(float(value)))
    if sweep_var == "L":
        return replace(config, grid_levels=int(float(value)))
    if sweep_var == "Q":
        rows, cols = parse_array_size(value)
        updated = replace(config, rows=rows, cols=cols)
        if config.mode != "element":
            if rows % config.panel_grid_rows or cols % config.panel_grid_cols:
                raise ConfigError(
                    f"Array {rows}x{cols} does not split into "
                    f"{config.panel_grid_rows}x{config.panel_grid_cols} panels"
                )
            updated = replace(
                updated,
                panel_rows=rows // config.panel_grid_rows,
                panel_cols=cols // config.panel_grid_cols,
            )
        return updated
    raise ConfigError(f"Unknown sweep variable: {sweep_var}")


def _fixed_outcome(
    scenario: Scenario, param: RotationParameterization, pattern: GainPattern
) -> SchemeOutcome:
    u = param.zeros()
    H = param.channel(scenario, u, pattern)
    return SchemeOutcome(mmse_sum_rate(H, scenario.normalized_powers), u, 0)


def _random_orientation(
    param: ElementRotation, rng: np.random.Generator, max_rounds: int = 1000
) -> np.ndarray:
    """Per-antenna angles uniform in [-theta_max, theta_max], redrawn until feasible"""
    limit = param.theta_max
    u = rng.uniform(-limit, limit, size=param.n_vars)
    for _ in range(max_rounds):
        bad = np.flatnonzero(param.violation_mask(u, 0.0))
        if bad.size == 0:
            return u
        u[param.alpha_var[bad]] = rng.uniform(-limit, limit, size=bad.size)
        u[param.beta_var[bad]] = rng.uniform(-limit, limit, size=bad.size)
    bad = np.flatnonzero(param.violation_mask(u, 0.0))
    u[param.alpha_var[bad]] = 0.0
    u[param.beta_var[bad]] = 0.0
    return u


def run_scheme(
    scheme: str,
    scenario: Scenario,
    config: ExperimentConfig,
    layout: Optional[ArrayLayout] = None,
    seed: int = 0,
) -> SchemeOutcome:
    """
    Evaluate one scheme on one scenario

    Args:
        scheme: Scheme name from SCHEME_TABLE
        scenario: Channel realisation
        config: Experiment configuration (pattern, limits, optimizer and GA
            parameters)
        layout: Layout override; defaults to layout_for_scheme(config, scheme)
        seed: Seed for the scheme's own randomness (GA, random orientation)

    Raises:
        LayoutModeError: If the scheme and layout mode are incompatible
    """
    spec = _spec(scheme)
    layout = layout or layout_for_scheme(config, scheme)
    if spec.mode not in (ANY_MODE, layout.mode):
        raise LayoutModeError(f"Scheme {scheme} needs a {spec.mode} layout")

    directivity = config.directivity if spec.directivity is None else spec.directivity
    pattern = GainPattern(directivity)
    theta_max = config.theta_max_rad
    param = parameterization_for(scheme, layout, theta_max)

    if spec.method == "fixed":
        return _fixed_outcome(scenario, param, pattern)

    if spec.method == "ao":
        result = alternating_optimize(
            scenario, param, config.feasdir_params(), pattern, verbose=config.verbose
        )
        return SchemeOutcome(result.report, result.u, result.iterations)

    if spec.method == "random":
        u = _random_orientation(param, substream_rng(seed, RANDOM_STREAM))
        H = param.channel(scenario, u, pattern)
        return SchemeOutcome(mmse_sum_rate(H, scenario.normalized_powers), u, 0)

    grid = AngleGrid.uniform(theta_max, config.grid_levels)

    if spec.method == "ga":
        result = run_ga(
            scenario, param, grid, config.ga_params(), pattern, seed, config.verbose
        )
        if not result.feasible:
            outcome = _fixed_outcome(scenario, param, pattern)
            outcome.iterations = result.generations
            outcome.feasible = False
            return outcome
        return SchemeOutcome(result.report, result.u, result.generations)

    if spec.method == "projection":
        continuous = alternating_optimize(
            scenario, param, config.feasdir_params(), pattern
        )
        projection = nearest_projection(continuous.u, grid, param)
        H = param.channel(scenario, projection.u, pattern)
        return SchemeOutcome(
            mmse_sum_rate(H, scenario.normalized_powers),
            projection.u,
            continuous.iterations,
            not projection.fallback,
        )

    raise ValueError(f"Unknown scheme method: {spec.method}")


def _trial_scenario(
    config: ExperimentConfig, trial: int, base: Optional[Scenario], sweep_var: str
) -> Scenario:
    """Generated scenario, or the fixed one with the swept power or user count"""
    if base is None:
        return generate_scenario(config, trial)
    if sweep_var == "power":
        return base.with_powers(dbm_to_watts(config.power_dbm))
    if sweep_var == "K":
        return base.subset_users(config.num_users)
    return base


def _run_task(task) -> ResultRow:
    """Worker entry point; one (scheme, sweep value, trial) evaluation"""
    config, scheme, sweep_var, sweep_value, trial, base = task
    seed = substream_seed(config.seed, trial)
    scenario = _trial_scenario(config, trial, base, sweep_var)

    start = time.perf_counter()
    outcome = run_scheme(scheme, scenario, config, seed=seed)
    elapsed_ms = int((time.perf_counter() - start) * 1000)

    return ResultRow(
        scheme=scheme,
        sweep_var=sweep_var,
        sweep_value=sweep_value,
        trial=trial,
        seed=seed,
        sum_rate_bps_hz=outcome.report.sum_rate,
        iters=outcome.iterations,
        wall_ms=elapsed_ms if config.record_timing else 0,
        user_rates=[float(r) for r in outcome.report.rates],
    )


def summarize(rows: List[ResultRow]) -> pd.DataFrame:
    """
    Mean, standard deviation and 95% normal confidence half-width per
    (scheme, sweep value), plus the gain over the fixed scheme when present
    """
    columns = ["scheme", "sweep_value", "mean", "std", "trials", "ci95"]
    if not rows:
        return pd.DataFrame(columns=columns)

    frame = pd.DataFrame([{**r.__dict__} for r in rows])
    summary = (
        frame.groupby(["scheme", "sweep_value"], sort=False)["sum_rate_bps_hz"]
        .agg(mean="mean", std="std", trials="count")
        .reset_index()
    )
    summary["std"] = summary["std"].fillna(0.0)
    summary["ci95"] = 1.96 * summary["std"] / np.sqrt(summary["trials"])

    if (summary["scheme"] == "fixed").any():
        fixed = summary[summary["scheme"] == "fixed"]
        fixed_means = fixed.set_index("sweep_value")["mean"]
        baseline = summary["sweep_value"].map(fixed_means)
        summary["gain_vs_fixed_pct"] = 100.0 * (summary["mean"] / baseline - 1.0)
    return summary


class ExperimentService:
    """Runs schemes over trials and sweep values"""

    def __init__(self, config: ExperimentConfig):
        """
        Initialize experiment service

        Args:
            config: Configuration object

        Raises:
            LayoutModeError: If a configured scheme does not fit the mode
        """
        self.config = config
        for scheme in config.schemes:
            layout_for_scheme(config, scheme)

    def sweep_points(self) -> List[Tuple[str, ExperimentConfig]]:
        """(label, config) for every sweep value, or a single default point"""
        if not self.config.sweep_var:
            return [("default", self.config)]
        return [
            (str(value), apply_sweep_value(self.config, self.config.sweep_var, value))
            for value in self.config.sweep_values
        ]

    def motor_counts(self) -> Dict[str, int]:
        return {
            scheme: motor_count(
                layout_for_scheme(self.config, scheme),
                scheme,
                self.config.theta_max_rad,
            )
            for scheme in self.config.schemes
        }

    def run_sweep(self, scenario: Optional[Scenario] = None) -> SweepResult:
        """
        Evaluate every (scheme, sweep value, trial) combination

        Rows come back in (scheme, sweep value, trial) order whatever the
        number of worker processes.

        Args:
            scenario: Fixed scenario to use for every trial instead of
                generated ones. Its per-user powers are kept except in a
                power sweep; a K sweep keeps its first K users.

        Raises:
            ConfigError: If a K sweep asks for more users than the scenario has
        """
        sweep_var = self.config.sweep_var or "none"
        points = self.sweep_points()
        if scenario is not None and sweep_var == "K":
            too_many = [
                label
                for label, point in points
                if point.num_users > scenario.num_users
            ]
            if too_many:
                raise ConfigError(
                    f"K sweep values {', '.join(too_many)} exceed the "
                    f"{scenario.num_users} users of the scenario file"
                )
        tasks = [
            (point_config, scheme, sweep_var, label, trial, scenario)
            for scheme in self.config.schemes
            for label, point_config in points
            for trial in range(self.config.trials)
        ]
        log_message(
            f"Running {len(tasks)} evaluations "
            f"({len(self.config.schemes)} schemes, {len(points)} sweep values, "
            f"{self.config.trials} trials)",
            "INFO",
            self.config.verbose,
        )

        rows: List[ResultRow] = []
        if self.config.threads > 1:
            with ProcessPoolExecutor(max_workers=self.config.threads) as pool:
                for row in pool.map(_run_task, tasks):
                    rows.append(row)
                    print_progress(len(rows), len(tasks), "Sweep")
        else:
            for task in tasks:
                rows.append(_run_task(task))
                print_progress(len(rows), len(tasks), "Sweep")

        return SweepResult(rows, summarize(rows), self.motor_counts(), sweep_var)

    def save(self, result: SweepResult):
        """Write result rows and, if configured, the summary table"""
        rows = [row.to_dict() for row in result.rows]
        save_results_to_csv(rows, self.config.output_file)
        if self.config.summary_file:
            try:
                result.summary.to_csv(self.config.summary_file, index=False)
            except OSError as e:
                raise OSError(
                    f"Error saving summary to {self.config.summary_file}: {e}"
                ) from e
            log_message(f"Summary saved to {self.config.summary_file}", "INFO")

    def run(self, scenario: Optional[Scenario] = None) -> SweepResult:
        """Run the sweep, save the outputs and print the summary"""
        result = self.run_sweep(scenario)
        self.save(result)
        print_sweep_summary(result.summary, result.sweep_var, result.motor_counts)
        return result
