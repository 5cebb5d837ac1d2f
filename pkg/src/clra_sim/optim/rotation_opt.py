#!/usr/bin/env python3
"""
Rotation angle optimization

Finite-difference gradients of the sum rate, the feasible-direction
(Frank-Wolfe style) inner loop with Armijo backtracking, the alternating
optimization between MMSE receivers and rotation angles, and the closed-form
single-user optimum of a uniform linear array.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..core.utils import log_message
from ..model.channel import GainPattern, Scenario, directional_gain, reference_gain
from ..model.geometry import ArrayLayout, LayoutModeError
from .beamforming import BeamformerSet, RateReport, mmse_beamformers, sum_rate
from .linprog import LinearProgram, solve_lp
from .parameterization import RotationParameterization


@dataclass
class FeasDirParams:
    """Armijo, trust-region and stopping parameters"""

    rho: float = 0.5
    upsilon: float = 0.1
    iota0: float = 1.0
    delta: float = 0.05
    eps_fd: float = 1e-5
    eps0: float = 1e-4
    eps1: float = 1e-3
    max_inner: int = 100
    max_outer: int = 50
    iota_min: float = 1e-8
    retract_min: float = 1e-6
    feas_tol: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0 or not 0.0 < self.upsilon < 1.0:
            raise ValueError("rho and upsilon must lie in (0, 1)")
        if not 0.0 < self.iota0 <= 1.0:
            raise ValueError("iota0 must lie in (0, 1]")
        if self.delta < 0 or self.eps_fd <= 0:
            raise ValueError("delta must be >= 0 and eps_fd > 0")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValueError("Iteration limits must be positive")


@dataclass
class IterationRecord:
    """One accepted iterate"""

    iteration: int
    objective: float
    step: float
    lp_status: str
    feasible: bool
    grad_norm: float
    gap: float
    evaluations: int
    pivots: int


@dataclass
class OptimizerTrace:
    """Iterates of one optimizer run; record 0 is the starting point"""

    records: List[IterationRecord] = field(default_factory=list)
    stop_reason: str = ""

    @property
    def iterations(self) -> int:
        return max(len(self.records) - 1, 0)

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    def is_monotone(self, tol: float = 1e-9) -> bool:
        values = self.objectives()
        return bool(np.all(np.diff(values) >= -tol))

    @property
    def total_evaluations(self) -> int:
        return sum(r.evaluations for r in self.records)

    @property
    def total_pivots(self) -> int:
        return sum(r.pivots for r in self.records)


class SumRateObjective:
    """
    Sum rate as a function of the angle vector

    With beamformers given they stay frozen; otherwise MMSE receivers are
    recomputed at every evaluation. Every channel rebuild is counted.
    """

    def __init__(
        self,
        scenario: Scenario,
        param: RotationParameterization,
        pattern: GainPattern,
        beamformers: Optional[BeamformerSet] = None,
    ):
        self.scenario = scenario
        self.param = param
        self.pattern = pattern
        self.beamformers = beamformers
        self.powers = scenario.normalized_powers
        self.evaluations = 0

    def report(self, u: np.ndarray) -> RateReport:
        self.evaluations += 1
        H = self.param.channel(self.scenario, u, self.pattern)
        W = self.beamformers
        if W is None:
            W = mmse_beamformers(H, self.powers)
        return sum_rate(H, W, self.powers)

    def value(self, u: np.ndarray) -> float:
        return self.report(u).sum_rate

    def gradient(self, u: np.ndarray, eps_fd: float) -> np.ndarray:
        """Central differences, two evaluations per variable"""
        u = np.asarray(u, dtype=float)
        grad = np.empty(u.size)
        for j in range(u.size):
            step = np.zeros(u.size)
            step[j] = eps_fd
            grad[j] = (self.value(u + step) - self.value(u - step)) / (2.0 * eps_fd)
        return grad


def objective_gradient(
    scenario: Scenario,
    param: RotationParameterization,
    u: np.ndarray,
    beamformers: BeamformerSet,
    eps_fd: float = 1e-5,
    pattern: Optional[GainPattern] = None,
) -> np.ndarray:
    """Finite-difference gradient of the sum rate with frozen receivers"""
    objective = SumRateObjective(scenario, param, pattern or GainPattern(), beamformers)
    return objective.gradient(u, eps_fd)


def linearized_element_constraints(param, u: np.ndarray, delta: float) -> LinearProgram:
    """Direction subproblem constraints for element rotation (zero objective)"""
    if param.requires_panel:
        raise LayoutModeError("element constraints need an element parameterization")
    return _direction_program(param, u, np.zeros(param.n_vars), delta)


def linearized_panel_constraints(param, u: np.ndarray, delta: float) -> LinearProgram:
    """Direction subproblem constraints for panel rotation (zero objective)"""
    if not param.requires_panel:
        raise LayoutModeError("panel constraints need a panel parameterization")
    return _direction_program(param, u, np.zeros(param.n_vars), delta)


def _direction_program(param, u, gradient, delta) -> LinearProgram:
    A, b = param.linearized_rows(u)
    box = np.full(param.n_vars, float(delta))
    return LinearProgram(gradient, A, b, -box, box)


def _retract(param, candidate, params: FeasDirParams) -> np.ndarray:
    """Largest feasible multiple s * candidate, s in [0, 1], by bisection"""
    if param.is_feasible(candidate, params.feas_tol):
        return candidate
    low, high = 0.0, 1.0
    while high - low > params.retract_min:
        mid = 0.5 * (low + high)
        if param.is_feasible(mid * candidate, params.feas_tol):
            low = mid
        else:
            high = mid
    if low == 0.0:
        return param.zeros()
    return low * candidate


def feasible_direction(
    scenario: Scenario,
    param: RotationParameterization,
    u0: np.ndarray,
    beamformers: BeamformerSet,
    params: Optional[FeasDirParams] = None,
    pattern: Optional[GainPattern] = None,
) -> Tuple[np.ndarray, OptimizerTrace]:
    """
    Feasible-direction ascent on the sum rate with frozen receivers

    Each iteration solves the linearized direction LP inside the trust
    region, then backtracks along the direction until the Armijo test holds
    at an exactly feasible point.

    Returns:
        (final angle vector, trace)

    Raises:
        ValueError: If u0 is infeasible
    """
    params = params or FeasDirParams()
    objective = SumRateObjective(scenario, param, pattern or GainPattern(), beamformers)
    u = np.array(u0, dtype=float)
    if not param.is_feasible(u, params.feas_tol):
        raise ValueError("Initial rotation state violates the rotation constraints")

    current = objective.value(u)
    trace = OptimizerTrace(
        [IterationRecord(0, current, 0.0, "start", True, math.nan, math.nan, 1, 0)]
    )

    for iteration in range(1, params.max_inner + 1):
        before = objective.evaluations
        gradient = objective.gradient(u, params.eps_fd)
        assert objective.evaluations - before == 2 * param.n_vars

        solution = solve_lp(_direction_program(param, u, gradient, params.delta))
        if not solution.optimal:
            log_message(
                f"Direction subproblem {solution.status} at a feasible point "
                f"(iteration {iteration})",
                "WARNING",
            )
            trace.stop_reason = "lp_failure"
            break

        direction = solution.x
        gap = float(gradient @ direction)
        if gap <= params.eps0:
            trace.stop_reason = "converged"
            break

        step = params.iota0
        accepted = None
        while step >= params.iota_min:
            candidate = _retract(param, u + step * direction, params)
            value = objective.value(candidate)
            if value - current >= params.upsilon * step * gap:
                accepted = (candidate, value)
                break
            step *= params.rho

        if accepted is None:
            trace.stop_reason = "stalled"
            break

        u, current = accepted
        trace.records.append(
            IterationRecord(
                iteration,
                current,
                step,
                solution.status,
                param.is_feasible(u, params.feas_tol),
                float(np.linalg.norm(gradient)),
                gap,
                objective.evaluations - before,
                solution.pivots,
            )
        )
    else:
        trace.stop_reason = "max_iter"

    return u, trace


@dataclass
class AoResult:
    """Outcome of alternating optimization"""

    u: np.ndarray
    beamformers: BeamformerSet
    report: RateReport
    trace: OptimizerTrace
    inner_traces: List[OptimizerTrace] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return self.trace.iterations


def alternating_optimize(
    scenario: Scenario,
    param: RotationParameterization,
    params: Optional[FeasDirParams] = None,
    pattern: Optional[GainPattern] = None,
    u0: Optional[np.ndarray] = None,
    verbose: bool = False,
) -> AoResult:
    """
    Alternate MMSE receiver updates and feasible-direction angle updates

    Starts from the all-zero orientation unless u0 is given and stops when
    the sum rate changes by at most eps1 or after max_outer rounds.
    """
    params = params or FeasDirParams()
    pattern = pattern or GainPattern()
    powers = scenario.normalized_powers

    u = param.zeros() if u0 is None else np.array(u0, dtype=float)
    H = param.channel(scenario, u, pattern)
    W = mmse_beamformers(H, powers)
    report = sum_rate(H, W, powers)
    trace = OptimizerTrace(
        [
            IterationRecord(
                0, report.sum_rate, 0.0, "start", True, math.nan, math.nan, 1, 0
            )
        ]
    )
    inner_traces = []

    for outer in range(1, params.max_outer + 1):
        previous = report.sum_rate
        u, inner = feasible_direction(scenario, param, u, W, params, pattern)
        inner_traces.append(inner)

        H = param.channel(scenario, u, pattern)
        W = mmse_beamformers(H, powers)
        report = sum_rate(H, W, powers)
        trace.records.append(
            IterationRecord(
                outer,
                report.sum_rate,
                float("nan"),
                inner.stop_reason,
                param.is_feasible(u, params.feas_tol),
                float("nan"),
                float("nan"),
                inner.total_evaluations + 1,
                inner.total_pivots,
            )
        )
        log_message(
            f"AO round {outer}: sum rate {report.sum_rate:.6f} bps/Hz "
            f"({inner.iterations} inner steps, {inner.stop_reason})",
            "INFO",
            verbose,
        )
        if abs(report.sum_rate - previous) <= params.eps1:
            trace.stop_reason = "converged"
            break
    else:
        trace.stop_reason = "max_iter"

    return AoResult(u, W, report, trace, inner_traces)


@dataclass
class OracleResult:
    """Closed-form single-user optimum of a 1 x N array"""

    alpha: float
    beta: np.ndarray
    cos_eps: np.ndarray
    snr: float


def single_user_oracle(
    layout: ArrayLayout,
    user: np.ndarray,
    theta_max: float,
    pattern: Optional[GainPattern] = None,
    normalized_power: float = 1.0,
    beta0: Optional[float] = None,
    wavelength: float = 0.0857,
) -> OracleResult:
    """
    Pointing angles and SNR of a single user served by a 1 x N array

    Every antenna points at the user; when the required eccentric angle
    exceeds theta_max the residual offset is the excess angle.

    Raises:
        ValueError: If the layout is not a single-row element array or the
            user is not in front of the array
    """
    if layout.is_panel or layout.rows != 1:
        raise ValueError("single_user_oracle needs a 1 x N element array")
    x0, y0, z0 = (float(c) for c in user)
    if x0 <= 0:
        raise ValueError("User must lie in front of the array (x > 0)")
    pattern = pattern or GainPattern()
    if beta0 is None:
        beta0 = reference_gain(wavelength)

    y_n = layout.element_positions()[:, 1]
    rho = math.hypot(x0, z0)
    r = np.sqrt(rho**2 + (y0 - y_n) ** 2)

    alpha = math.copysign(math.acos(x0 / rho), z0) if z0 != 0 else 0.0
    beta = np.sign(y_n - y0) * np.arccos(np.clip(rho / r, -1.0, 1.0))

    theta = np.arctan(np.sqrt((y0 - y_n) ** 2 + z0**2) / x0)
    cos_eps = np.cos(np.maximum(theta - theta_max, 0.0))
    gains = np.array([directional_gain(pattern, c) for c in cos_eps])
    snr = float(normalized_power * beta0 * np.sum(gains / r**2))
    return OracleResult(alpha, beta, cos_eps, snr)
