#!/usr/bin/env python3
"""
Utility functions for the CL-RA simulator

Common helpers: logging, progress bars, unit conversion, seeding,
result persistence and console summaries
"""

import csv
import json
import sys
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

RESULT_FIELDNAMES = [
    "scheme",
    "sweep_var",
    "sweep_value",
    "trial",
    "seed",
    "sum_rate_bps_hz",
    "iters",
    "wall_ms",
    "user_rates",
]


def print_progress(current: int, total: int, prefix: str = "Progress"):
    """
    Print a progress bar

    Args:
        current: Current progress
        total: Total items
        prefix: Progress bar prefix
    """
    if total == 0:
        return

    percent = (current / total) * 100
    filled_length = int(50 * current // total)
    bar = "█" * filled_length + "-" * (50 - filled_length)

    print(f"\r{prefix}: |{bar}| {percent:.1f}% ({current}/{total})", end="", flush=True)

    if current == total:
        print()  # New line when complete


def format_timestamp() -> str:
    """Get formatted timestamp"""
    return datetime.now().strftime("%Y-%m-%d %H:%M:%S")


def log_message(message: str, level: str = "INFO", verbose: bool = True):
    """
    Log a message with timestamp and level

    Args:
        message: Message to log
        level: Log level (INFO, WARNING, ERROR)
        verbose: Whether to print verbose messages
    """
    if not verbose and level == "INFO":
        return

    timestamp = format_timestamp()

    # Color codes for different levels
    colors = {
        "INFO": "\033[92m",  # Green
        "WARNING": "\033[93m",  # Yellow
        "ERROR": "\033[91m",  # Red
        "RESET": "\033[0m",  # Reset
    }

    color = colors.get(level, "")
    reset = colors["RESET"]

    stream = sys.stderr if level in ("WARNING", "ERROR") else sys.stdout
    print(f"{color}[{timestamp}] {level}: {message}{reset}", file=stream)


def dbm_to_watts(value_dbm: float) -> float:
    """Convert a power level in dBm to watts"""
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def watts_to_dbm(value_w: float) -> float:
    """Convert a power level in watts to dBm"""
    return 10.0 * np.log10(value_w) + 30.0


def substream_seed(master_seed: int, *keys: int) -> int:
    """
    Derive an independent 64-bit seed from a master seed and integer keys

    The same (master_seed, keys) always yields the same seed, and distinct
    keys give statistically independent streams.
    """
    sequence = np.random.SeedSequence(
        int(master_seed), spawn_key=tuple(int(k) for k in keys)
    )
    low, high = sequence.generate_state(2, dtype=np.uint32)
    return int(high) << 32 | int(low)


def substream_rng(master_seed: int, *keys: int) -> np.random.Generator:
    """Random generator for the substream identified by keys"""
    return np.random.default_rng(
        np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    )


def format_user_rates(rates: Sequence[float]) -> str:
    """Semicolon-joined per-user rates with fixed precision"""
    return ";".join(f"{rate:.10f}" for rate in rates)


def parse_user_rates(text: str) -> List[float]:
    """Inverse of format_user_rates"""
    if not text:
        return []
    return [float(part) for part in text.split(";")]


def save_results_to_csv(rows: List[Dict[str, Any]], filename: str):
    """
    Save sweep result rows to a CSV file

    Args:
        rows: Result rows as dictionaries keyed by RESULT_FIELDNAMES
        filename: Output filename

    Raises:
        OSError: If the file cannot be written; the message names the path
    """
    try:
        with open(filename, "w", newline="", encoding="utf-8") as csvfile:
            writer = csv.DictWriter(csvfile, fieldnames=RESULT_FIELDNAMES)
            writer.writeheader()
            for row in rows:
                writer.writerow({name: row.get(name, "") for name in RESULT_FIELDNAMES})
    except OSError as e:
        raise OSError(f"Error saving results to {filename}: {e}") from e

    log_message(f"Results saved to {filename}", "INFO")


def load_results_from_csv(filename: str) -> List[Dict[str, Any]]:
    """
    Load sweep result rows written by save_results_to_csv

    Args:
        filename: Input filename

    Returns:
        List of rows with numeric columns converted
    """
    try:
        with open(filename, "r", newline="", encoding="utf-8") as csvfile:
            reader = csv.DictReader(csvfile)
            rows = []
            for raw in reader:
                rows.append(
                    {
                        "scheme": raw["scheme"],
                        "sweep_var": raw["sweep_var"],
                        "sweep_value": raw["sweep_value"],
                        "trial": int(raw["trial"]),
                        "seed": int(raw["seed"]),
                        "sum_rate_bps_hz": float(raw["sum_rate_bps_hz"]),
                        "iters": int(raw["iters"]),
                        "wall_ms": int(raw["wall_ms"]),
                        "user_rates": parse_user_rates(raw["user_rates"]),
                    }
                )
    except OSError as e:
        raise OSError(f"Error loading results from {filename}: {e}") from e

    return rows


def save_results_to_json(payload: Dict[str, Any], filename: str):
    """
    Save a JSON document (summaries, validation reports)

    Args:
        payload: JSON-serialisable dictionary
        filename: Output filename
    """
    output_data = {"timestamp": format_timestamp(), **payload}
    try:
        with open(filename, "w", encoding="utf-8") as jsonfile:
            json.dump(output_data, jsonfile, indent=2, ensure_ascii=False)
    except OSError as e:
        raise OSError(f"Error saving results to {filename}: {e}") from e

    log_message(f"Results saved to {filename}", "INFO")


def print_sweep_summary(
    summary, sweep_var: str, motor_counts: Optional[Dict[str, int]] = None
):
    """
    Print a summary table of a parameter sweep

    Args:
        summary: pandas DataFrame with columns scheme, sweep_value, mean,
            ci95, trials and optionally gain_vs_fixed_pct
        sweep_var: Name of the swept parameter
        motor_counts: Optional motor count per scheme
    """
    if summary is None or len(summary) == 0:
        log_message("No results to summarize", "WARNING")
        return

    print("\n" + "=" * 72)
    print("📊 SUM RATE SUMMARY")
    print("=" * 72)
    print(f"Sweep variable: {sweep_var}")

    has_gain = "gain_vs_fixed_pct" in summary.columns
    for scheme, group in summary.groupby("scheme", sort=False):
        header = f"\n{scheme}"
        if motor_counts and scheme in motor_counts:
            header += f" (motors: {motor_counts[scheme]})"
        print(header)
        for _, row in group.iterrows():
            line = (
                f"  {sweep_var}={row['sweep_value']:<10} "
                f"mean={row['mean']:.4f} bps/Hz  ±{row['ci95']:.4f} "
                f"(n={int(row['trials'])})"
            )
            if has_gain and not np.isnan(row["gain_vs_fixed_pct"]):
                line += f"  vs fixed: {row['gain_vs_fixed_pct']:+.1f}%"
            print(line)

    print("=" * 72)


def handle_keyboard_interrupt():
    """Handle keyboard interrupt gracefully"""
    print("\n\n⚠️  Simulation interrupted by user")
    print("Partial results were not written")
    sys.exit(1)
