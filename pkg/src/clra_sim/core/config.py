#!/usr/bin/env python3
"""
Configuration Management for the CL-RA simulator

Handles configuration loading from environment variables, config files,
and command-line arguments. Defaults reproduce the reference simulation
setup (K=6 users, Q=64 antennas, D=8 scatterers).
"""

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional

SCHEMES = (
    "cl_element",
    "cl_panel",
    "cl_panel_unconstrained",
    "flexible_element",
    "flexible_panel",
    "flexible_panel_unconstrained",
    "array_wise",
    "random_orientation",
    "fixed",
    "isotropic",
    "ga_element",
    "ga_panel",
    "nearest_projection",
)

SWEEP_VARIABLES = ("power", "theta_max", "p", "Q", "K", "L")

MODES = ("element", "panel", "both")


class ConfigError(ValueError):
    """Raised when a configuration value is missing or out of range"""


@dataclass
class ExperimentConfig:
    """Configuration for a CL-RA experiment"""

    # Array geometry (element mode)
    rows: int = 8
    cols: int = 8
    wavelength_m: float = 0.0857
    spacing_wavelengths: float = 0.5
    occupation_ratio: float = 1.0

    # Panel geometry: panel grid M_B x N_B, antennas per panel M_b x N_b
    panel_grid_rows: int = 2
    panel_grid_cols: int = 2
    panel_rows: int = 4
    panel_cols: int = 4

    # Antenna pattern and rotation limit
    directivity: float = 2.0
    theta_max_rad: float = math.pi / 6

    # Link budget
    noise_dbm: float = -80.0
    power_dbm: float = 10.0

    # Scenario generation
    num_users: int = 6
    num_clusters: int = 8
    rcs_m2: float = 1.0
    user_distance_min_m: float = 50.0
    user_distance_max_m: float = 70.0
    user_height_m: float = 10.0
    cluster_distance_min_m: float = 20.0
    cluster_distance_max_m: float = 60.0
    cluster_height_m: float = 10.0

    # Experiment selection
    mode: str = "both"
    schemes: List[str] = field(default_factory=lambda: ["cl_element", "fixed"])
    sweep_var: Optional[str] = None
    sweep_values: List[Any] = field(default_factory=list)
    trials: int = 10
    seed: int = 2024
    threads: int = 1

    # Feasible-direction / alternating optimization
    armijo_shrink: float = 0.5
    armijo_slope: float = 0.1
    initial_step: float = 1.0
    trust_radius: float = 0.05
    fd_step: float = 1e-5
    inner_tol: float = 1e-4
    outer_tol: float = 1e-3
    inner_max_iter: int = 100
    outer_max_iter: int = 50

    # Genetic algorithm
    ga_population: int = 200
    ga_generations: int = 100
    ga_crossover_prob: float = 0.8
    ga_mutation_prob: float = 0.1
    ga_tournament_size: int = 2
    ga_penalty: float = -10.0
    ga_elite: int = 1
    grid_levels: int = 15

    # Output settings
    output_file: str = "results.csv"
    summary_file: Optional[str] = None
    record_timing: bool = True
    verbose: bool = False

    @property
    def spacing_m(self) -> float:
        return self.spacing_wavelengths * self.wavelength_m

    def feasdir_params(self):
        """Optimizer parameters as a FeasDirParams instance"""
        from ..optim.rotation_opt import FeasDirParams

        return FeasDirParams(
            rho=self.armijo_shrink,
            upsilon=self.armijo_slope,
            iota0=self.initial_step,
            delta=self.trust_radius,
            eps_fd=self.fd_step,
            eps0=self.inner_tol,
            eps1=self.outer_tol,
            max_inner=self.inner_max_iter,
            max_outer=self.outer_max_iter,
        )

    def ga_params(self):
        """Genetic algorithm parameters as a GaParams instance"""
        from ..optim.discrete_ga import GaParams

        return GaParams(
            population=self.ga_population,
            generations=self.ga_generations,
            crossover_prob=self.ga_crossover_prob,
            mutation_prob=self.ga_mutation_prob,
            tournament_size=self.ga_tournament_size,
            penalty=self.ga_penalty,
            elite=self.ga_elite,
        )


CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _env_flag(value: str) -> bool:
    return value.lower() in ("true", "1", "yes")


class ConfigManager:
    """Manages configuration loading from various sources"""

    def __init__(self):
        self.config = None

    def load_from_env(self) -> Dict[str, Any]:
        """Load configuration from environment variables"""
        config = {}

        try:
            if os.getenv("CLRA_SEED"):
                config["seed"] = int(os.getenv("CLRA_SEED"))
            if os.getenv("CLRA_TRIALS"):
                config["trials"] = int(os.getenv("CLRA_TRIALS"))
            if os.getenv("CLRA_THREADS"):
                config["threads"] = int(os.getenv("CLRA_THREADS"))
        except ValueError as e:
            raise ConfigError(f"Invalid integer in environment: {e}") from e

        if os.getenv("CLRA_OUTPUT"):
            config["output_file"] = os.getenv("CLRA_OUTPUT")
        if os.getenv("CLRA_VERBOSE"):
            config["verbose"] = _env_flag(os.getenv("CLRA_VERBOSE"))

        return config

    def load_from_file(self, config_file: str) -> Dict[str, Any]:
        """
        Load configuration from a JSON file

        Angles may be given as theta_max_rad or theta_max_deg. Unknown keys
        are rejected.
        """
        try:
            with open(config_file, "r", encoding="utf-8") as f:
                config = json.load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"Configuration file {config_file} not found") from e
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"Error parsing configuration file {config_file}: {e}"
            ) from e
        except OSError as e:
            raise OSError(f"Error loading configuration file {config_file}: {e}") from e

        if not isinstance(config, dict):
            raise ConfigError(f"{config_file}: top level must be a JSON object")

        if "theta_max_deg" in config:
            if "theta_max_rad" in config:
                raise ConfigError(
                    f"{config_file}: give theta_max_rad or theta_max_deg, not both"
                )
            config["theta_max_rad"] = math.radians(float(config.pop("theta_max_deg")))

        unknown = sorted(set(config) - CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"{config_file}: unknown keys {', '.join(unknown)}")

        print(f"✅ Loaded configuration from {config_file}")
        return config

    def load_from_args(self, args) -> Dict[str, Any]:
        """Load configuration from command-line arguments"""
        config = {}

        if getattr(args, "seed", None) is not None:
            config["seed"] = args.seed
        if getattr(args, "trials", None) is not None:
            config["trials"] = args.trials
        if getattr(args, "threads", None) is not None:
            config["threads"] = args.threads
        if getattr(args, "out", None):
            config["output_file"] = args.out
        if getattr(args, "summary", None):
            config["summary_file"] = args.summary
        if getattr(args, "scheme", None):
            config["schemes"] = list(args.scheme)
        if getattr(args, "mode", None):
            config["mode"] = args.mode
        if getattr(args, "sweep_var", None):
            config["sweep_var"] = args.sweep_var
        if getattr(args, "values", None):
            config["sweep_values"] = list(args.values)
        if getattr(args, "no_timing", False):
            config["record_timing"] = False
        if getattr(args, "verbose", False):
            config["verbose"] = True

        return config

    def validate(self, config_dict: Dict[str, Any]):
        """Check ranges and enumerations; raises ConfigError"""
        for name in ("rows", "cols", "panel_grid_rows", "panel_grid_cols"):
            if int(config_dict[name]) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        for name in ("panel_rows", "panel_cols", "num_users", "trials", "threads"):
            if int(config_dict[name]) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if int(config_dict["num_clusters"]) < 0:
            raise ConfigError("num_clusters must be non-negative")
        if not 0.0 <= float(config_dict["theta_max_rad"]) <= math.pi / 2:
            raise ConfigError("theta_max must lie in [0, pi/2]")
        if float(config_dict["directivity"]) < 0:
            raise ConfigError("directivity must be non-negative")
        if float(config_dict["wavelength_m"]) <= 0:
            raise ConfigError("wavelength_m must be positive")
        if config_dict["user_distance_min_m"] > config_dict["user_distance_max_m"]:
            raise ConfigError("user distance range is empty")
        cluster_range = (
            config_dict["cluster_distance_min_m"],
            config_dict["cluster_distance_max_m"],
        )
        if cluster_range[0] > cluster_range[1]:
            raise ConfigError("cluster distance range is empty")

        if config_dict["mode"] not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        schemes = config_dict["schemes"]
        if not isinstance(schemes, list) or len(schemes) == 0:
            raise ConfigError("schemes must be a non-empty list")
        unknown = [s for s in schemes if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"unknown schemes: {', '.join(unknown)}")

        sweep_var = config_dict.get("sweep_var")
        if sweep_var is not None:
            if sweep_var not in SWEEP_VARIABLES:
                raise ConfigError(
                    f"sweep_var must be one of {', '.join(SWEEP_VARIABLES)}"
                )
            if not config_dict.get("sweep_values"):
                raise ConfigError("sweep_values must be non-empty for a sweep")

        if not 0.0 < float(config_dict["armijo_shrink"]) < 1.0:
            raise ConfigError("armijo_shrink must lie in (0, 1)")
        if not 0.0 < float(config_dict["armijo_slope"]) < 1.0:
            raise ConfigError("armijo_slope must lie in (0, 1)")
        if not 0.0 < float(config_dict["initial_step"]) <= 1.0:
            raise ConfigError("initial_step must lie in (0, 1]")
        if float(config_dict["trust_radius"]) < 0 or float(config_dict["fd_step"]) <= 0:
            raise ConfigError("trust_radius must be >= 0 and fd_step > 0")

        if int(config_dict["ga_population"]) < 2:
            raise ConfigError("ga_population must be at least 2")
        for name in ("ga_crossover_prob", "ga_mutation_prob"):
            if not 0.0 <= float(config_dict[name]) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if float(config_dict["ga_penalty"]) >= 0:
            raise ConfigError("ga_penalty must be negative")
        if int(config_dict["ga_tournament_size"]) < 1:
            raise ConfigError("ga_tournament_size must be at least 1")
        if int(config_dict["grid_levels"]) < 1:
            raise ConfigError("grid_levels must be at least 1")

    def create_config(self, args=None, config_file: str = None) -> ExperimentConfig:
        """
        Create a complete configuration by merging sources

        Priority order (highest to lowest):
        1. Command-line arguments
        2. Configuration file
        3. Environment variables
        4. Default values

        Args:
            args: Parsed command-line arguments
            config_file: Path to configuration file

        Returns:
            Complete configuration object

        Raises:
            ConfigError: If the merged configuration is invalid
        """
        config_dict = asdict(ExperimentConfig())

        config_dict.update(self.load_from_env())

        if config_file:
            config_dict.update(self.load_from_file(config_file))

        if args:
            config_dict.update(self.load_from_args(args))

        self.validate(config_dict)

        self.config = ExperimentConfig(**config_dict)
        return self.config

    def save_config(self, config: ExperimentConfig, config_file: str):
        """Save configuration to file"""
        try:
            with open(config_file, "w", encoding="utf-8") as f:
                json.dump(asdict(config), f, indent=2)
        except OSError as e:
            raise OSError(f"Error saving configuration to {config_file}: {e}") from e
        print(f"✅ Configuration saved to {config_file}")

    def print_config(self, config: ExperimentConfig):
        """Print current configuration"""
        print("📋 Current Configuration:")
        print(f"  Element array: {config.rows}x{config.cols}")
        print(
            f"  Panels: {config.panel_grid_rows}x{config.panel_grid_cols} "
            f"of {config.panel_rows}x{config.panel_cols}"
        )
        print(f"  Users / clusters: {config.num_users} / {config.num_clusters}")
        print(f"  theta_max: {math.degrees(config.theta_max_rad):.1f} deg")
        print(f"  Directivity p: {config.directivity}")
        print(f"  Power / noise: {config.power_dbm} dBm / {config.noise_dbm} dBm")
        print(f"  Mode: {config.mode}")
        print(f"  Schemes: {', '.join(config.schemes)}")
        if config.sweep_var:
            print(f"  Sweep: {config.sweep_var} over {config.sweep_values}")
        print(f"  Trials: {config.trials} (seed {config.seed})")
        print(f"  Threads: {config.threads}")
        print()


def create_sample_config_file(path: str = "configs/config.json"):
    """Create a sample configuration file with the default setup"""
    sample_config = asdict(ExperimentConfig())
    sample_config.pop("theta_max_rad")
    sample_config["theta_max_deg"] = 30.0
    sample_config["schemes"] = ["cl_element", "cl_panel", "random_orientation", "fixed"]
    sample_config["sweep_var"] = "power"
    sample_config["sweep_values"] = [0, 5, 10, 15, 20]

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    with open(path, "w", encoding="utf-8") as f:
        json.dump(sample_config, f, indent=2)

    print(f"✅ Sample configuration file created as {path}")
    print("Edit this file before running a sweep.")


if __name__ == "__main__":
    # Create sample config file when run directly
    create_sample_config_file()
