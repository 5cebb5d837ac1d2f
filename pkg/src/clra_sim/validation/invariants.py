#!/usr/bin/env python3
"""
Invariant and Oracle Suites for the CL-RA simulator

Randomised checks of the geometry, gain normalisation, receivers, LP
solver, optimizer and genetic algorithm against closed forms or brute
force. Each suite returns a result dictionary; run_all collects them for
the validate command.
"""

import math
import time
from typing import Any, Dict, List, Optional

import numpy as np

from ..core.config import ExperimentConfig
from ..core.utils import dbm_to_watts, log_message, substream_rng
from ..model.channel import GainPattern, Scenario, hemisphere_power
from ..model.geometry import (
    ArrayLayout,
    analytic_feasible_range,
    panel_constraint_values,
    rotation_matrices,
)
from ..optim.beamforming import (
    mmse,
    mmse_beamformers,
    mmse_direct,
    mmse_sum_rate,
    sinr_all,
)
from ..optim.discrete_ga import (
    AngleGrid,
    GaParams,
    exhaustive_search,
    nearest_projection,
    run_ga,
)
from ..optim.linprog import LinearProgram, solve_lp, vertex_enumeration
from ..optim.parameterization import ElementRotation
from ..optim.rotation_opt import FeasDirParams, alternating_optimize, single_user_oracle

# Panel grids whose closed-form ranges cover every neighbour pattern
RANGE_LAYOUTS = ((1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 3), (2, 4))


class InvariantValidator:
    """Runs the oracle and invariant suites"""

    def __init__(self, seed: int = 2024, scale: float = 1.0, verbose: bool = False):
        """
        Initialize validator

        Args:
            seed: Master seed; each suite draws from its own substream
            scale: Multiplier on every suite's sample count
            verbose: Whether to log per-suite progress
        """
        self.seed = seed
        self.scale = scale
        self.verbose = verbose

    def _count(self, full: int) -> int:
        return max(1, int(round(full * self.scale)))

    def _rng(self, stream: int) -> np.random.Generator:
        return substream_rng(self.seed, stream)

    @staticmethod
    def _result(
        name: str,
        checked: int,
        failures: int,
        max_error: float,
        start: float,
        **details,
    ) -> Dict[str, Any]:
        return {
            "name": name,
            "passed": failures == 0,
            "checked": checked,
            "failures": failures,
            "max_error": float(max_error),
            "elapsed_ms": int((time.perf_counter() - start) * 1000),
            "details": details,
        }

    def check_rotation_matrices(self, count: int = 10**6) -> Dict[str, Any]:
        """R^T R = I, det R = 1 and ||f|| = 1 for random angles"""
        start = time.perf_counter()
        count = self._count(count)
        rng = self._rng(1)
        failures, worst = 0, 0.0
        for chunk in range(0, count, 100_000):
            size = min(100_000, count - chunk)
            alpha = rng.uniform(-math.pi, math.pi, size)
            beta = rng.uniform(-math.pi, math.pi, size)
            R = rotation_matrices(alpha, beta)
            ortho = np.abs(np.einsum("kji,kjl->kil", R, R) - np.eye(3)).max(axis=(1, 2))
            det = np.abs(np.linalg.det(R) - 1.0)
            norm = np.abs(np.linalg.norm(R[:, :, 0], axis=1) - 1.0)
            error = np.maximum(np.maximum(ortho, det), norm)
            failures += int(np.count_nonzero(error > 1e-12))
            worst = max(worst, float(error.max()))
        return self._result("rotation_matrices", count, failures, worst, start)

    def check_gain_normalization(self, ps=(0.0, 0.5, 1.0, 2.0, 4.0)) -> Dict[str, Any]:
        """Front-hemisphere integral of the pattern equals 4 pi"""
        start = time.perf_counter()
        errors = [abs(hemisphere_power(GainPattern(p)) - 4.0 * math.pi) for p in ps]
        failures = sum(e > 1e-3 for e in errors)
        return self._result(
            "gain_normalization",
            len(ps),
            failures,
            max(errors),
            start,
            directivities=list(ps),
        )

    def check_woodbury(self, instances: int = 100) -> Dict[str, Any]:
        """Woodbury MMSE receivers against the explicit Q x Q inverse"""
        start = time.perf_counter()
        instances = self._count(instances)
        rng = self._rng(2)
        failures, worst = 0, 0.0
        for _ in range(instances):
            K = int(rng.integers(2, 9))
            Q = int(rng.integers(K, 65))
            H = (rng.normal(size=(Q, K)) + 1j * rng.normal(size=(Q, K))) / math.sqrt(2)
            powers = 10.0 ** rng.uniform(-1, 3, size=K)
            for k in range(K):
                fast, slow = mmse(H, powers, k), mmse_direct(H, powers, k)
                error = np.linalg.norm(fast - slow) / np.linalg.norm(slow)
                worst = max(worst, float(error))
                failures += int(error > 1e-10)
        return self._result("woodbury", instances, failures, worst, start)

    def check_mmse_optimality(
        self, scenarios: int = 20, draws: int = 1000
    ) -> Dict[str, Any]:
        """No random unit beamformer beats the MMSE SINR"""
        start = time.perf_counter()
        scenarios, draws = self._count(scenarios), self._count(draws)
        rng = self._rng(3)
        failures, worst = 0, 0.0
        for _ in range(scenarios):
            K = int(rng.integers(2, 7))
            Q = int(rng.integers(2, 17))
            H = (rng.normal(size=(Q, K)) + 1j * rng.normal(size=(Q, K))) / math.sqrt(2)
            powers = 10.0 ** rng.uniform(0, 2, size=K)
            best = sinr_all(H, mmse_beamformers(H, powers), powers)
            W = rng.normal(size=(draws, K, Q)) + 1j * rng.normal(size=(draws, K, Q))
            W /= np.linalg.norm(W, axis=2, keepdims=True)
            for weights in W:
                excess = sinr_all(H, weights, powers) - best
                worst = max(worst, float(excess.max()))
                failures += int(np.count_nonzero(excess > 1e-9))
        return self._result(
            "mmse_optimality", scenarios * draws, failures, max(worst, 0.0), start
        )

    def check_lp_solver(self, problems: int = 200) -> Dict[str, Any]:
        """Simplex optima against vertex enumeration on small boxed LPs"""
        start = time.perf_counter()
        problems = self._count(problems)
        rng = self._rng(4)
        failures, worst = 0, 0.0
        for _ in range(problems):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(0, 9))
            lp = LinearProgram(
                rng.normal(size=n),
                rng.normal(size=(m, n)),
                rng.normal(size=m),
                -rng.uniform(0.5, 2.0, size=n),
                rng.uniform(0.5, 2.0, size=n),
            )
            simplex, reference = solve_lp(lp), vertex_enumeration(lp)
            if simplex.status != reference.status:
                failures += 1
                continue
            if simplex.optimal:
                error = abs(simplex.value - reference.value)
                worst = max(worst, error)
                failures += int(error > 1e-9 * max(1.0, abs(reference.value)))
        return self._result("lp_solver", problems, failures, worst, start)

    def check_single_user_oracle(self, instances: int = 20) -> Dict[str, Any]:
        """Alternating optimization reaches the closed-form single-user SNR"""
        start = time.perf_counter()
        instances = self._count(instances)
        rng = self._rng(5)
        layout = ArrayLayout(1, 8, 0.0857 / 2)
        param = ElementRotation(layout, math.pi / 2)
        params = FeasDirParams(eps0=1e-7, eps1=1e-6, max_inner=400)
        failures, worst = 0, 0.0
        for _ in range(instances):
            distance = rng.uniform(50.0, 70.0)
            azimuth = rng.uniform(-math.pi / 3, math.pi / 3)
            user = np.array(
                [
                    distance * math.cos(azimuth),
                    distance * math.sin(azimuth),
                    rng.uniform(-10, 10),
                ]
            )
            scenario = Scenario(
                user[None, :], dbm_to_watts(10.0), noise_w=dbm_to_watts(-80.0)
            )
            result = alternating_optimize(scenario, param, params)
            snr = 2.0 ** result.report.sum_rate - 1.0
            oracle = single_user_oracle(
                layout,
                user,
                math.pi / 2,
                normalized_power=float(scenario.normalized_powers[0]),
                beta0=scenario.beta0,
            )
            error = abs(snr - oracle.snr) / oracle.snr
            worst = max(worst, error)
            failures += int(error > 5e-3)
        return self._result("single_user_oracle", instances, failures, worst, start)

    def check_feasible_ranges(self, samples: int = 10**5) -> Dict[str, Any]:
        """Closed-form panel ranges against direct constraint evaluation"""
        start = time.perf_counter()
        samples = self._count(samples)
        rng = self._rng(6)
        mismatches, checked = 0, 0
        for rows, cols in RANGE_LAYOUTS:
            layout = ArrayLayout(
                rows, cols, 0.04, mode="panel", panel_rows=2, panel_cols=2
            )
            m_idx, n_idx = layout.grid_indices()
            count = layout.num_panels
            for b in range(count):
                feasible_range = analytic_feasible_range(layout, b)
                alpha = rng.uniform(-math.pi / 2, math.pi / 2, samples)
                beta = rng.uniform(-math.pi / 2, math.pi / 2, samples)
                alpha[rng.random(samples) < 0.1] = 0.0
                beta[rng.random(samples) < 0.1] = 0.0
                alpha_b = np.zeros((samples, count))
                beta_b = np.zeros((samples, count))
                alpha_b[:, b], beta_b[:, b] = alpha, beta
                pair, cpu = panel_constraint_values(alpha_b, beta_b, m_idx, n_idx)
                others = np.arange(count) != b
                direct = np.all(pair[:, b, others] <= 0.0, axis=1) & (cpu[:, b] >= 0.0)
                analytic = np.array(
                    [
                        feasible_range.contains(a, bt, tol=0.0)
                        for a, bt in zip(alpha, beta)
                    ]
                )
                mismatches += int(np.count_nonzero(direct != analytic))
                checked += samples
        return self._result("feasible_ranges", checked, mismatches, mismatches, start)

    def check_convergence(
        self, config: Optional[ExperimentConfig] = None
    ) -> Dict[str, Any]:
        """Monotone AO trace that settles within 20 outer rounds at full scale"""
        from ..services.experiment_service import build_layout, generate_scenario

        start = time.perf_counter()
        config = config or ExperimentConfig()
        scenario = generate_scenario(config, 0)
        param = ElementRotation(build_layout(config, "element"), config.theta_max_rad)
        result = alternating_optimize(
            scenario, param, config.feasdir_params(), GainPattern(config.directivity)
        )
        gradient_cost_ok = all(
            record.evaluations >= 2 * param.n_vars + 1
            for inner in result.inner_traces
            for record in inner.records[1:]
            if record.step > 0
        )
        failures = int(not result.trace.is_monotone(1e-9))
        settled = result.trace.stop_reason == "converged" and result.iterations <= 20
        failures += int(not settled)
        failures += int(not gradient_cost_ok)
        return self._result(
            "convergence",
            1,
            failures,
            0.0,
            start,
            outer_iterations=result.iterations,
            sum_rate=result.report.sum_rate,
            evaluations=sum(t.total_evaluations for t in result.inner_traces),
            pivots=sum(t.total_pivots for t in result.inner_traces),
        )

    def check_ga_exhaustive(self, seeds: int = 20) -> Dict[str, Any]:
        """The GA finds the brute-force optimum on toy instances"""
        start = time.perf_counter()
        seeds = self._count(seeds)
        rng = self._rng(7)
        layout = ArrayLayout(1, 3, 0.0857 / 2)
        param = ElementRotation(layout, math.pi / 4)
        grid = AngleGrid.uniform(math.pi / 4, 5)
        users = np.column_stack(
            [rng.uniform(20, 40, 2), rng.uniform(-20, 20, 2), rng.uniform(-5, 5, 2)]
        )
        scenario = Scenario(users, dbm_to_watts(10.0), noise_w=dbm_to_watts(-80.0))
        _, optimum = exhaustive_search(scenario, param, grid)

        hits, worst = 0, 0.0
        for seed in range(seeds):
            result = run_ga(scenario, param, grid, GaParams(), seed=seed)
            gap = optimum - result.fitness
            worst = max(worst, gap)
            hits += int(gap <= 1e-12)
        failures = int(hits < math.ceil(0.95 * seeds))
        return self._result(
            "ga_exhaustive", seeds, failures, worst, start, hits=hits, optimum=optimum
        )

    def check_ga_vs_projection(self, runs: int = 20) -> Dict[str, Any]:
        """
        The GA matches or beats snapping the continuous optimum to the grid

        Desk-scale 1 x 3 array on a 15-level grid; passes when the GA is at
        least as good in 80% of the seeded runs.
        """
        start = time.perf_counter()
        runs = self._count(runs)
        rng = self._rng(8)
        param = ElementRotation(ArrayLayout(1, 3, 0.0857 / 2), math.pi / 6)
        grid = AngleGrid.uniform(math.pi / 6, 15)
        pattern = GainPattern()

        wins, worst, gains = 0, 0.0, []
        for run in range(runs):
            users = np.column_stack(
                [rng.uniform(20, 40, 2), rng.uniform(-20, 20, 2), rng.uniform(-5, 5, 2)]
            )
            clusters = np.column_stack(
                [rng.uniform(10, 30, 2), rng.uniform(-15, 15, 2), rng.uniform(-5, 5, 2)]
            )
            scenario = Scenario(
                users,
                dbm_to_watts(10.0),
                cluster_positions=clusters,
                cluster_rcs=np.ones(2),
                cluster_phases=rng.uniform(0, 2 * math.pi, 2),
                noise_w=dbm_to_watts(-80.0),
            )
            continuous = alternating_optimize(scenario, param, FeasDirParams(), pattern)
            projected = nearest_projection(continuous.u, grid, param)
            H = param.channel(scenario, projected.u, pattern)
            baseline = mmse_sum_rate(H, scenario.normalized_powers).sum_rate
            ga = run_ga(scenario, param, grid, GaParams(), pattern, seed=run).fitness
            wins += int(ga >= baseline - 1e-9)
            worst = max(worst, baseline - ga)
            gains.append(ga - baseline)
        failures = int(wins < math.ceil(0.8 * runs))
        return self._result(
            "ga_vs_projection",
            runs,
            failures,
            max(worst, 0.0),
            start,
            wins=wins,
            mean_gain=float(np.mean(gains)),
        )

    def run_all(
        self, config: Optional[ExperimentConfig] = None
    ) -> List[Dict[str, Any]]:
        """Run every suite in turn"""
        suites = [
            self.check_rotation_matrices,
            self.check_gain_normalization,
            self.check_woodbury,
            self.check_mmse_optimality,
            self.check_lp_solver,
            self.check_feasible_ranges,
            self.check_single_user_oracle,
            self.check_ga_exhaustive,
            self.check_ga_vs_projection,
            lambda: self.check_convergence(config),
        ]
        results = []
        for suite in suites:
            result = suite()
            log_message(
                f"{result['name']}: {result['checked']} checked, "
                f"{result['failures']} failures ({result['elapsed_ms']} ms)",
                "INFO",
                self.verbose,
            )
            results.append(result)
        return results


def print_validation_report(results: List[Dict[str, Any]]):
    """Print one line per suite and the overall verdict"""
    print("\n" + "=" * 72)
    print("🔍 VALIDATION REPORT")
    print("=" * 72)
    for result in results:
        mark = "✅" if result["passed"] else "❌"
        print(
            f"{mark} {result['name']:<20} checked={result['checked']:<8} "
            f"failures={result['failures']:<4} max_error={result['max_error']:.3e} "
            f"({result['elapsed_ms']} ms)"
        )
    passed = sum(r["passed"] for r in results)
    print("=" * 72)
    print(f"{passed}/{len(results)} suites passed")
