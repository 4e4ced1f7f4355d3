#!/usr/bin/env python3
"""
Derivative-free optimizers for BasketOptimizer
Grid search, bounded and unbounded simulated annealing, differential evolution and grey wolf optimizer
All optimizers maximize
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .design import EPSILON_MAX, TuningParams
from .errors import DomainError
from .tables import write_table

logger = logging.getLogger("basketopt.optimizers")

Objective = Callable[[np.ndarray], float]

DEFAULT_GRIDS: Tuple[Tuple[float, ...], ...] = (
    (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99, 0.999),
    (0.0, 0.5, 1.0, 1.5, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0),
    (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0),
)
DEFAULT_START = (0.2, 0.5, 0.0)
DEFAULT_BUDGET = 1000
T_END = 1e-3


class Algorithm(str, Enum):
    GRID = "grid"
    SA_BOUNDED = "sa_bounded"
    SA_UNBOUNDED = "sa_unbounded"
    DE = "de"
    GWO = "gwo"


DEFAULT_T_START = {Algorithm.SA_BOUNDED: 10.0, Algorithm.SA_UNBOUNDED: 10.0}
STOCHASTIC = frozenset({Algorithm.SA_BOUNDED.value, Algorithm.SA_UNBOUNDED.value, Algorithm.DE.value, Algorithm.GWO.value})


def is_available(name: str) -> bool:
    return name in {a.value for a in Algorithm}


@dataclass(frozen=True)
class Box:
    """Search box in (lambda, epsilon, tau) order"""
    lower: Tuple[float, ...] = (0.0, 0.0, 0.0)
    upper: Tuple[float, ...] = (1.0, EPSILON_MAX, 1.0)

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or any(lo >= up for lo, up in zip(lower, upper)):
            raise DomainError(f"Box needs lower < upper componentwise, got {lower} and {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def lower_array(self) -> np.ndarray:
        return np.asarray(self.lower)

    @property
    def upper_array(self) -> np.ndarray:
        return np.asarray(self.upper)

    @property
    def width(self) -> np.ndarray:
        return self.upper_array - self.lower_array

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower_array) and np.all(x <= self.upper_array))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower_array, self.upper_array)

    def uniform(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.lower_array + rng.random((count, self.dimension)) * self.width

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower_array) / self.width


@dataclass(frozen=True)
class OptimizerConfig:
    """Algorithm choice plus its settings"""
    algorithm: str = Algorithm.SA_BOUNDED.value
    budget: int = DEFAULT_BUDGET
    seed: int = 1856
    start: Optional[Tuple[float, ...]] = None
    t_start: Optional[float] = None
    t_end: float = T_END
    step_scale: float = 0.1
    pop: int = 40
    f: float = 0.8
    cr: float = 0.5
    grids: Tuple[Tuple[float, ...], ...] = DEFAULT_GRIDS
    workers: int = 1

    def __post_init__(self):
        algorithm = self.algorithm.value if isinstance(self.algorithm, Algorithm) else str(self.algorithm)
        object.__setattr__(self, "algorithm", algorithm)
        if self.budget < 1:
            raise DomainError("budget must be positive")
        if algorithm in (Algorithm.DE.value, Algorithm.GWO.value) and self.budget < 2 * self.pop:
            raise DomainError(f"budget {self.budget} is below two populations of {self.pop}")
        if any(len(g) == 0 for g in self.grids):
            raise DomainError("grids must be non-empty")

    @property
    def resolved_t_start(self) -> float:
        if self.t_start is not None:
            return float(self.t_start)
        try:
            return DEFAULT_T_START[Algorithm(self.algorithm)]
        except (KeyError, ValueError):
            return 10.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "budget": self.budget,
            "seed": self.seed,
            "start": list(self.start or DEFAULT_START),
            "t_start": self.resolved_t_start,
            "t_end": self.t_end,
            "step_scale": self.step_scale,
            "pop": self.pop,
            "f": self.f,
            "cr": self.cr,
            "grids": [list(g) for g in self.grids],
            "workers": self.workers,
        }


@dataclass
class TraceRecord:
    eval_index: int
    x: Tuple[float, ...]
    utility: float
    accepted: bool = False


@dataclass
class OptimizerResult:
    """Best point, its utility and the full evaluation trace"""
    algorithm: str
    phi_star: Tuple[float, ...]
    u_star: float
    n_evals: int
    trace: List[TraceRecord]
    wall_time: float
    seed: Optional[int]
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def phi(self) -> TuningParams:
        return TuningParams.from_vector(self.phi_star)

    def to_dict(self, include_trace: bool = False) -> Dict[str, Any]:
        data = {
            "algorithm": self.algorithm,
            "phi_star": list(self.phi_star),
            "u_star": self.u_star,
            "n_evals": self.n_evals,
            "wall_time": self.wall_time,
            "seed": self.seed,
            "metadata": self.metadata,
        }
        if include_trace:
            data["trace"] = [trace_row(r) for r in self.trace]
        return data


TRACE_COLUMNS = ["eval_index", "lambda", "epsilon", "tau", "utility", "accepted"]


def trace_row(record: TraceRecord) -> Dict[str, Any]:
    lam, epsilon, tau = record.x
    return {
        "eval_index": record.eval_index,
        "lambda": lam,
        "epsilon": epsilon,
        "tau": tau,
        "utility": record.utility,
        "accepted": int(record.accepted),
    }


def write_trace_csv(result: OptimizerResult, path: Union[str, Path]) -> str:
    """Trace as CSV (eval_index, lambda, epsilon, tau, utility, accepted)"""
    return write_table([trace_row(r) for r in result.trace], TRACE_COLUMNS, path)


class _Tracker:
    """Counts objective calls, enforces the budget and records the trace"""

    def __init__(self, objective: Objective, budget: int, workers: int = 1):
        self.objective = objective
        self.budget = budget
        self.workers = workers
        self.trace: List[TraceRecord] = []
        self.started = time.perf_counter()

    @property
    def used(self) -> int:
        return len(self.trace)

    def _record(self, x: np.ndarray, value: float) -> TraceRecord:
        record = TraceRecord(self.used + 1, tuple(float(v) for v in x), float(value))
        self.trace.append(record)
        return record

    def evaluate(self, x: np.ndarray) -> TraceRecord:
        if self.used >= self.budget:
            raise DomainError(f"Evaluation budget of {self.budget} exhausted")
        return self._record(x, self.objective(np.asarray(x, dtype=float)))

    def reject(self, x: np.ndarray) -> TraceRecord:
        """Out-of-box proposal: consumes budget, utility -inf"""
        if self.used >= self.budget:
            raise DomainError(f"Evaluation budget of {self.budget} exhausted")
        return self._record(x, -math.inf)

    def evaluate_many(self, points: Sequence[np.ndarray]) -> List[TraceRecord]:
        if self.used + len(points) > self.budget:
            raise DomainError(f"Evaluation budget of {self.budget} exhausted")
        arrays = [np.asarray(p, dtype=float) for p in points]
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                values = list(executor.map(self.objective, arrays))
        else:
            values = [self.objective(x) for x in arrays]
        return [self._record(x, v) for x, v in zip(arrays, values)]

    def result(self, algorithm: str, seed: Optional[int], **metadata) -> OptimizerResult:
        best = max(self.trace, key=lambda r: r.utility)
        return OptimizerResult(
            algorithm=algorithm,
            phi_star=best.x,
            u_star=best.utility,
            n_evals=self.used,
            trace=self.trace,
            wall_time=time.perf_counter() - self.started,
            seed=seed,
            metadata=metadata,
        )


def reflect(y, lower, upper):
    """Fold y back into [lower, upper] by repeated reflection at the bounds"""
    y = np.asarray(y, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    span = upper - lower
    folded = upper - np.abs(np.mod(y - lower, 2.0 * span) - span)
    return float(folded) if folded.ndim == 0 else folded


def grid_search(objective: Objective, grids: Sequence[Sequence[float]] = DEFAULT_GRIDS,
                workers: int = 1) -> OptimizerResult:
    """Evaluate every grid combination once; ties go to the lexicographically smallest point"""
    axes = [sorted(set(float(v) for v in g)) for g in grids]
    if any(not axis for axis in axes):
        raise DomainError("grids must be non-empty")
    points = [np.asarray(p) for p in product(*axes)]
    tracker = _Tracker(objective, len(points), workers)
    records = tracker.evaluate_many(points)

    best_value = -math.inf
    for record in records:
        if record.utility > best_value:
            best_value = record.utility
            record.accepted = True
    # Points come in lexicographic order and max() keeps the first maximum
    return tracker.result(Algorithm.GRID.value, None, grid_shape=[len(a) for a in axes])


def _anneal(objective: Objective, box: Box, t_start: float, budget: int, seed: int,
            start: Optional[Sequence[float]], bounded: bool, step_scale: float,
            t_end: float) -> OptimizerResult:
    if t_start <= 0:
        raise DomainError(f"Start temperature must be positive, got {t_start}")
    start_point = np.asarray(start if start is not None else DEFAULT_START, dtype=float)
    if not box.contains(start_point):
        raise DomainError(f"Start point {tuple(start_point)} lies outside the box")

    rng = np.random.default_rng(seed)
    tracker = _Tracker(objective, budget)
    current = tracker.evaluate(start_point)
    current.accepted = True
    x, u = start_point, current.utility

    final_temperature = min(t_end, t_start)
    cooling = (final_temperature / t_start) ** (1.0 / budget)
    temperature = t_start
    sigma = step_scale * box.width
    accepted = 0

    for _ in range(1, budget):
        temperature *= cooling
        proposal = x + rng.normal(0.0, sigma)
        if bounded:
            proposal = reflect(proposal, box.lower_array, box.upper_array)
            record = tracker.evaluate(proposal)
        elif box.contains(proposal):
            record = tracker.evaluate(proposal)
        else:
            record = tracker.reject(proposal)
        draw = rng.random()
        delta = record.utility - u
        if delta >= 0 or (math.isfinite(delta) and draw < math.exp(delta / temperature)):
            x, u = proposal, record.utility
            record.accepted = True
            accepted += 1

    algorithm = Algorithm.SA_BOUNDED if bounded else Algorithm.SA_UNBOUNDED
    return tracker.result(
        algorithm.value, seed,
        t_start=t_start, t_end=final_temperature, cooling="geometric",
        step_scale=step_scale, start=list(start_point),
        acceptance_ratio=accepted / max(budget - 1, 1),
    )


def sa_bounded(objective: Objective, box: Box = Box(), t_start: float = 10.0, budget: int = DEFAULT_BUDGET,
               seed: int = 1856, start: Optional[Sequence[float]] = None,
               step_scale: float = 0.1, t_end: float = T_END) -> OptimizerResult:
    """Simulated annealing with proposals reflected into the box"""
    return _anneal(objective, box, t_start, budget, seed, start, True, step_scale, t_end)


def sa_unbounded(objective: Objective, box: Box = Box(), t_start: float = 10.0, budget: int = DEFAULT_BUDGET,
                 seed: int = 1856, start: Optional[Sequence[float]] = None,
                 step_scale: float = 0.1, t_end: float = T_END) -> OptimizerResult:
    """Simulated annealing where out-of-box proposals score -inf"""
    return _anneal(objective, box, t_start, budget, seed, start, False, step_scale, t_end)


def de(objective: Objective, box: Box = Box(), pop: int = 40, f: float = 0.8, cr: float = 0.5,
       budget: int = DEFAULT_BUDGET, seed: int = 1856, workers: int = 1) -> OptimizerResult:
    """Differential evolution, rand/1/bin with greedy better-or-equal replacement"""
    if pop < 4:
        raise DomainError("Differential evolution needs a population of at least 4")
    if budget < 2 * pop:
        raise DomainError(f"budget {budget} is below two populations of {pop}")

    rng = np.random.default_rng(seed)
    tracker = _Tracker(objective, budget, workers)
    dimension = box.dimension
    population = box.uniform(rng, pop)
    records = tracker.evaluate_many(population)
    for record in records:
        record.accepted = True
    fitness = np.array([r.utility for r in records])
    generations = (budget - pop) // pop
    best_per_generation = [float(fitness.max())]

    for generation in range(generations):
        trials = np.empty_like(population)
        for i in range(pop):
            others = np.delete(np.arange(pop), i)
            r1, r2, r3 = rng.choice(others, size=3, replace=False)
            mutant = population[r1] + f * (population[r2] - population[r3])
            crossover = rng.random(dimension) < cr
            crossover[rng.integers(dimension)] = True
            trials[i] = box.clip(np.where(crossover, mutant, population[i]))

        records = tracker.evaluate_many(trials)
        for i, record in enumerate(records):
            if record.utility >= fitness[i]:
                population[i] = trials[i]
                fitness[i] = record.utility
                record.accepted = True
        best_per_generation.append(float(fitness.max()))
        logger.debug(f"DE generation {generation + 1}/{generations}: best {best_per_generation[-1]:.6f}")

    return tracker.result(
        Algorithm.DE.value, seed,
        pop=pop, f=f, cr=cr, generations=generations, initialization="uniform",
        boundary="clip", best_per_generation=best_per_generation,
    )


def gwo(objective: Objective, box: Box = Box(), pop: int = 40, budget: int = DEFAULT_BUDGET,
        seed: int = 1856, workers: int = 1) -> OptimizerResult:
    """Grey wolf optimizer led by the best three points found so far"""
    if pop < 3:
        raise DomainError("Grey wolf optimizer needs a population of at least 3")
    if budget < 2 * pop:
        raise DomainError(f"budget {budget} is below two populations of {pop}")

    rng = np.random.default_rng(seed)
    tracker = _Tracker(objective, budget, workers)
    population = box.uniform(rng, pop)
    records = tracker.evaluate_many(population)
    iterations = budget // pop
    updates = iterations - 1

    leaders: List[Tuple[np.ndarray, float]] = []

    def merge_leaders(points: np.ndarray, batch: List[TraceRecord]):
        nonlocal leaders
        alpha_before = leaders[0][1] if leaders else -math.inf
        pool = leaders + [(points[i].copy(), r.utility) for i, r in enumerate(batch)]
        # Stable sort keeps earlier leaders ahead on ties
        pool.sort(key=lambda item: -item[1])
        leaders = pool[:3]
        for record in batch:
            if record.utility > alpha_before:
                record.accepted = True
                alpha_before = record.utility

    merge_leaders(population, records)
    alpha_per_iteration = [leaders[0][1]]
    # a falls linearly from 2 to 0 at the last update
    a_schedule = np.linspace(2.0, 0.0, updates)

    for t, a in enumerate(a_schedule):
        moved = np.zeros_like(population)
        for leader, _ in leaders:
            r1 = rng.random(population.shape)
            r2 = rng.random(population.shape)
            coefficient_a = 2.0 * a * r1 - a
            coefficient_c = 2.0 * r2
            distance = np.abs(coefficient_c * leader - population)
            moved += leader - coefficient_a * distance
        population = box.clip(moved / len(leaders))
        records = tracker.evaluate_many(population)
        merge_leaders(population, records)
        alpha_per_iteration.append(leaders[0][1])
        logger.debug(f"GWO iteration {t + 1}/{updates}: alpha {leaders[0][1]:.6f}")

    return tracker.result(
        Algorithm.GWO.value, seed,
        pop=pop, iterations=iterations, initialization="uniform", boundary="clip",
        alpha_per_iteration=alpha_per_iteration, a_schedule=a_schedule.tolist(),
    )


def run_optimizer(config: OptimizerConfig, objective: Objective, box: Box = Box()) -> OptimizerResult:
    """Run the configured algorithm"""
    name = config.algorithm
    if name == Algorithm.GRID.value:
        return grid_search(objective, config.grids, config.workers)
    if name == Algorithm.SA_BOUNDED.value:
        return sa_bounded(objective, box, config.resolved_t_start, config.budget, config.seed,
                          config.start, config.step_scale, config.t_end)
    if name == Algorithm.SA_UNBOUNDED.value:
        return sa_unbounded(objective, box, config.resolved_t_start, config.budget, config.seed,
                            config.start, config.step_scale, config.t_end)
    if name == Algorithm.DE.value:
        return de(objective, box, config.pop, config.f, config.cr, config.budget, config.seed, config.workers)
    if name == Algorithm.GWO.value:
        return gwo(objective, box, config.pop, config.budget, config.seed, config.workers)
    raise DomainError(f"Optimizer '{name}' is not available")
