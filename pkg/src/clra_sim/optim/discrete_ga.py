#!/usr/bin/env python3
"""
Discrete rotation angles

Genetic algorithm over per-row and per-column grid indices with a penalty
for constraint violations, an exhaustive reference search for toy
instances, and the nearest-grid projection of a continuous solution.
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.utils import log_message, substream_rng
from ..model.channel import GainPattern, Scenario
from .beamforming import RateReport
from .parameterization import RotationParameterization
from .rotation_opt import SumRateObjective


@dataclass
class AngleGrid:
    """Sorted candidate values for alpha and beta"""

    alpha_values: np.ndarray
    beta_values: np.ndarray

    def __post_init__(self):
        self.alpha_values = np.sort(np.atleast_1d(np.asarray(self.alpha_values, float)))
        self.beta_values = np.sort(np.atleast_1d(np.asarray(self.beta_values, float)))
        if self.alpha_values.size == 0 or self.beta_values.size == 0:
            raise ValueError("Angle grids must be non-empty")
        for values in (self.alpha_values, self.beta_values):
            if np.any(values <= -np.pi) or np.any(values > np.pi):
                raise ValueError("Grid angles must lie in (-pi, pi]")

    @classmethod
    def uniform(cls, theta_max: float, levels: int) -> "AngleGrid":
        """levels points spread evenly over [-theta_max, theta_max]"""
        if levels < 1:
            raise ValueError("Grid needs at least one level")
        if levels == 1 or theta_max == 0:
            values = np.zeros(1)
        else:
            values = np.linspace(-theta_max, theta_max, levels)
        return cls(values, values.copy())

    def gene_sizes(self, n_alpha: int, n_beta: int) -> np.ndarray:
        return np.concatenate(
            [
                np.full(n_alpha, self.alpha_values.size),
                np.full(n_beta, self.beta_values.size),
            ]
        )

    def decode(self, chromosome: np.ndarray, n_alpha: int) -> np.ndarray:
        """Angle vector of a chromosome: first n_alpha genes index alpha values"""
        chromosome = np.asarray(chromosome, dtype=int)
        return np.concatenate(
            [
                self.alpha_values[chromosome[:n_alpha]],
                self.beta_values[chromosome[n_alpha:]],
            ]
        )

    def nearest_indices(self, u: np.ndarray, n_alpha: int) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        alpha = np.abs(self.alpha_values[None, :] - u[:n_alpha, None]).argmin(axis=1)
        beta = np.abs(self.beta_values[None, :] - u[n_alpha:, None]).argmin(axis=1)
        return np.concatenate([alpha, beta])


@dataclass
class GaParams:
    """Population size, operators and penalty of the genetic algorithm"""

    population: int = 200
    generations: int = 100
    crossover_prob: float = 0.8
    mutation_prob: float = 0.1
    tournament_size: int = 2
    penalty: float = -10.0
    elite: int = 1

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("Population must hold at least two individuals")
        probabilities = (self.crossover_prob, self.mutation_prob)
        if not all(0.0 <= p <= 1.0 for p in probabilities):
            raise ValueError("Crossover and mutation probabilities must lie in [0, 1]")
        if self.penalty >= 0:
            raise ValueError("Penalty coefficient must be negative")
        if self.tournament_size < 1:
            raise ValueError("Tournament size must be at least 1")
        if not 0 <= self.elite < self.population:
            raise ValueError("Elite count must lie in [0, population)")


class GaFitness:
    """Penalised sum rate with a cache keyed by chromosome"""

    def __init__(
        self,
        scenario: Scenario,
        param: RotationParameterization,
        grid: AngleGrid,
        penalty: float,
        pattern: GainPattern,
        tol: float = 1e-9,
    ):
        self.param = param
        self.grid = grid
        self.penalty = penalty
        self.tol = tol
        self.objective = SumRateObjective(scenario, param, pattern)
        self.cache: Dict[Tuple[int, ...], float] = {}

    def __call__(self, chromosome: np.ndarray) -> float:
        key = tuple(int(g) for g in chromosome)
        if key not in self.cache:
            u = self.grid.decode(chromosome, self.param.n_alpha)
            violations = self.param.violation_count(u, self.tol)
            if violations:
                self.cache[key] = self.penalty * violations
            else:
                self.cache[key] = self.objective.value(u)
        return self.cache[key]

    def report(self, chromosome: np.ndarray) -> RateReport:
        return self.objective.report(self.grid.decode(chromosome, self.param.n_alpha))


def fitness(
    chromosome: np.ndarray,
    scenario: Scenario,
    param: RotationParameterization,
    grid: AngleGrid,
    penalty: float = -10.0,
    pattern: Optional[GainPattern] = None,
) -> float:
    """
    Sum rate with MMSE receivers, or penalty * (number of violations)

    Violations are counted per antenna for element rotation and per
    constraint row for panel rotation.
    """
    evaluate = GaFitness(scenario, param, grid, penalty, pattern or GainPattern())
    return evaluate(chromosome)


def tournament_select(
    population: np.ndarray, fitnesses: np.ndarray, eta: int, rng: np.random.Generator
) -> np.ndarray:
    """
    Winner of a tournament between eta distinct individuals

    Ties among the fittest are broken uniformly at random.
    """
    size = len(population)
    if size == 0:
        raise ValueError("Cannot select from an empty population")
    if eta < 1:
        raise ValueError("Tournament size must be at least 1")
    fitnesses = np.asarray(fitnesses, dtype=float)
    players = rng.choice(size, size=min(eta, size), replace=False)
    best = fitnesses[players].max()
    winners = players[fitnesses[players] == best]
    winner = winners[0] if winners.size == 1 else rng.choice(winners)
    return np.array(population[winner], copy=True)


def two_point_crossover(
    a: np.ndarray,
    b: np.ndarray,
    p_c: float,
    rng: np.random.Generator,
    cuts: Optional[Tuple[int, int]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Swap the genes between two cut points

    With probability 1 - p_c the parents are copied unchanged. Explicit
    cuts (i, j) swap a[i:j] and b[i:j] unconditionally.
    """
    a = np.array(a, copy=True)
    b = np.array(b, copy=True)
    if a.shape != b.shape:
        raise ValueError("Parents must have equal length")
    if cuts is None:
        if a.size < 2 or rng.random() >= p_c:
            return a, b
        i, j = np.sort(rng.choice(a.size + 1, size=2, replace=False))
    else:
        i, j = sorted(cuts)
    a[i:j], b[i:j] = b[i:j].copy(), a[i:j].copy()
    return a, b


def mutate(
    chromosome: np.ndarray,
    p_m: float,
    gene_sizes: Sequence[int],
    rng: np.random.Generator,
) -> np.ndarray:
    """Resample each gene with probability p_m to a different in-range index"""
    child = np.array(chromosome, copy=True)
    gene_sizes = np.asarray(gene_sizes, dtype=int)
    hits = rng.random(child.size) < p_m
    for g in np.flatnonzero(hits):
        if gene_sizes[g] >= 2:
            child[g] = (child[g] + rng.integers(1, gene_sizes[g])) % gene_sizes[g]
    return child


@dataclass
class GaResult:
    """Best individual found by run_ga"""

    chromosome: np.ndarray
    u: np.ndarray
    fitness: float
    feasible: bool
    report: Optional[RateReport]
    best_history: List[float] = field(default_factory=list)
    evaluations: int = 0

    @property
    def generations(self) -> int:
        return max(len(self.best_history) - 1, 0)


def run_ga(
    scenario: Scenario,
    param: RotationParameterization,
    grid: AngleGrid,
    params: Optional[GaParams] = None,
    pattern: Optional[GainPattern] = None,
    seed: int = 0,
    verbose: bool = False,
) -> GaResult:
    """
    Elitist genetic algorithm over discrete row/column angles

    Individual i of the initial population draws from substream (0, i);
    offspring pair j of generation g draws from substream (g, j), so a run
    is reproducible from the seed alone.
    """
    params = params or GaParams()
    pattern = pattern or GainPattern()
    evaluate = GaFitness(scenario, param, grid, params.penalty, pattern)
    sizes = grid.gene_sizes(param.n_alpha, param.n_beta)

    population = np.array(
        [substream_rng(seed, 0, i).integers(0, sizes) for i in range(params.population)]
    )
    scores = np.array([evaluate(c) for c in population])
    history = [float(scores.max())]

    for generation in range(1, params.generations + 1):
        order = np.argsort(-scores, kind="stable")
        children = [population[i].copy() for i in order[: params.elite]]
        pair = 0
        while len(children) < params.population:
            rng = substream_rng(seed, generation, pair)
            first = tournament_select(population, scores, params.tournament_size, rng)
            second = tournament_select(population, scores, params.tournament_size, rng)
            first, second = two_point_crossover(
                first, second, params.crossover_prob, rng
            )
            children.append(mutate(first, params.mutation_prob, sizes, rng))
            if len(children) < params.population:
                children.append(mutate(second, params.mutation_prob, sizes, rng))
            pair += 1
        population = np.array(children)
        scores = np.array([evaluate(c) for c in population])
        history.append(float(scores.max()))
        log_message(
            f"GA generation {generation}: best fitness {history[-1]:.6f}",
            "INFO",
            verbose,
        )

    best = int(np.argmax(scores))
    chromosome = population[best].copy()
    u = grid.decode(chromosome, param.n_alpha)
    feasible = param.violation_count(u, evaluate.tol) == 0
    if not feasible:
        log_message("GA found no feasible individual", "WARNING")
    return GaResult(
        chromosome=chromosome,
        u=u,
        fitness=float(scores[best]),
        feasible=feasible,
        report=evaluate.report(chromosome) if feasible else None,
        best_history=history,
        evaluations=evaluate.objective.evaluations,
    )


def exhaustive_search(
    scenario: Scenario,
    param: RotationParameterization,
    grid: AngleGrid,
    penalty: float = -10.0,
    pattern: Optional[GainPattern] = None,
) -> Tuple[np.ndarray, float]:
    """Best chromosome over the full grid (toy instances only)"""
    evaluate = GaFitness(scenario, param, grid, penalty, pattern or GainPattern())
    sizes = grid.gene_sizes(param.n_alpha, param.n_beta)
    best_chromosome, best_value = None, -np.inf
    for genes in itertools.product(*(range(s) for s in sizes)):
        value = evaluate(np.array(genes))
        if value > best_value:
            best_chromosome, best_value = np.array(genes), value
    return best_chromosome, float(best_value)


@dataclass
class ProjectionResult:
    """Grid point chosen for a continuous solution"""

    u: np.ndarray
    fallback: bool
    repairs: int


def nearest_projection(
    u_continuous: np.ndarray,
    grid: AngleGrid,
    param: RotationParameterization,
    tol: float = 1e-9,
) -> ProjectionResult:
    """
    Snap every angle to its nearest grid value, then repair violations

    Repair repeatedly takes the angle involved in the most violated
    constraints and moves it to the grid value closest to its continuous
    value that lowers the violation count. When no single move helps, the
    all-zero orientation is returned with the fallback flag set.
    """
    u_continuous = np.asarray(u_continuous, dtype=float)
    u = grid.decode(grid.nearest_indices(u_continuous, param.n_alpha), param.n_alpha)
    incidence = param.incidence()
    repairs = 0

    while True:
        mask = param.violation_mask(u, tol)
        total = int(np.count_nonzero(mask))
        if total == 0:
            return ProjectionResult(u, False, repairs)

        involvement = incidence[mask].sum(axis=0)
        improved = False
        for j in np.argsort(-involvement, kind="stable"):
            if involvement[j] == 0:
                break
            values = grid.alpha_values if j < param.n_alpha else grid.beta_values
            closest = np.argsort(np.abs(values - u_continuous[j]), kind="stable")
            for value in values[closest]:
                if value == u[j]:
                    continue
                trial = u.copy()
                trial[j] = value
                if param.violation_count(trial, tol) < total:
                    u = trial
                    improved = True
                    break
            if improved:
                break

        if not improved:
            log_message(
                "Nearest projection found no feasible repair; using zero state",
                "WARNING",
            )
            return ProjectionResult(param.zeros(), True, repairs)
        repairs += 1
