#!/usr/bin/env python3
"""
TAC Optimizer - Derivative-free search for revenue/externality optimal charges
Compass pattern search over bounded decision vectors plus a brute-force grid scan
"""

import concurrent.futures
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from demand import DemandModel
from evaluation_framework import EvaluationFramework, ObjectiveBreakdown, Policy
from network import Network
from pricing import (
    PATH_BASED, PROPORTIONAL, TIME_VARYING, VectorLayout, equal_grid, from_vector, layout_for,
)
from simulator import FreightSimulator, SimConfig

logger = logging.getLogger(__name__)

PATTERN_SEARCH = "pattern-search"
GRID = "grid"

Objective = Callable[[np.ndarray], Tuple[float, Any]]


class OptimizerError(ValueError):
    """Invalid optimization problem or configuration"""


class InfeasibleStartError(OptimizerError):
    """The initial point lies outside the problem bounds"""


@dataclass(frozen=True)
class BoundedProblem:
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    objective: Objective

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise OptimizerError("Lower and upper bounds differ in length")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise OptimizerError(f"Bounds are inverted: {self.lower} > {self.upper}")

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= np.asarray(self.lower)) and np.all(x <= np.asarray(self.upper)))

    @classmethod
    def box(cls, dimension: int, bounds: Tuple[float, float], objective: Objective) -> 'BoundedProblem':
        lo, hi = bounds
        return cls(tuple([float(lo)] * dimension), tuple([float(hi)] * dimension), objective)


@dataclass(frozen=True)
class PatternSearchConfig:
    initial_point: Sequence[float]
    initial_mesh: float = 0.05
    contraction_factor: float = 0.5
    expansion_factor: float = 2.0
    mesh_tolerance: float = 1e-4
    max_evaluations: int = 500
    poll_order: Optional[Sequence[int]] = None   # coordinate order, defaults to 0..d-1
    parallel_poll: bool = False
    max_workers: int = 1

    def __post_init__(self):
        if not 0 < self.contraction_factor < 1 <= self.expansion_factor:
            raise OptimizerError("Need 0 < contraction_factor < 1 <= expansion_factor")
        if not self.mesh_tolerance > 0 or not self.initial_mesh > 0:
            raise OptimizerError("Mesh size and tolerance must be > 0")
        if self.max_evaluations < 1:
            raise OptimizerError("Evaluation budget must be at least 1")


@dataclass(frozen=True)
class GridScanConfig:
    steps: int = 26
    parallel: bool = False
    max_workers: int = 1

    def __post_init__(self):
        if self.steps < 1:
            raise OptimizerError("Grid scan needs at least one step")


@dataclass(frozen=True)
class EvaluationRecord:
    index: int
    vector: Tuple[float, ...]
    Z: float


@dataclass
class SearchResult:
    best_vector: np.ndarray
    best_Z: float
    best_info: Any
    history: List[Tuple[int, float, float]]
    evaluations: List[EvaluationRecord]

    @property
    def n_evaluations(self) -> int:
        return len(self.evaluations)


@dataclass
class GridScanResult:
    best_p: float
    best_Z: float
    best_info: Any
    curve: List[Tuple[float, float, Any]]
    evaluations: List[EvaluationRecord]

    @property
    def history(self) -> List[float]:
        """Running best Z along the scan"""
        return list(np.maximum.accumulate([z for _, z, _ in self.curve]))

    @property
    def n_evaluations(self) -> int:
        return len(self.evaluations)


class _Evaluator:
    """Budgeted, cached objective calls merged in submission order"""

    def __init__(self, problem: BoundedProblem, budget: Optional[int],
                 executor: Optional[concurrent.futures.Executor] = None):
        self.problem = problem
        self.budget = budget
        self.executor = executor
        self.cache: Dict[Tuple[float, ...], Tuple[float, Any]] = {}
        self.records: List[EvaluationRecord] = []

    @property
    def remaining(self) -> float:
        return float('inf') if self.budget is None else self.budget - len(self.records)

    def evaluate(self, points: List[np.ndarray]) -> List[Tuple[float, Any]]:
        if self.executor is not None and len(points) > 1:
            outcomes = list(self.executor.map(self.problem.objective, points))
        else:
            outcomes = [self.problem.objective(x) for x in points]
        for x, (z, info) in zip(points, outcomes):
            key = tuple(float(v) for v in x)
            self.cache[key] = (float(z), info)
            self.records.append(EvaluationRecord(len(self.records), key, float(z)))
        return [(float(z), info) for z, info in outcomes]


def _executor_for(parallel: bool, max_workers: int):
    if parallel and max_workers > 1:
        return concurrent.futures.ProcessPoolExecutor(max_workers=max_workers)
    return None


def pattern_search(problem: BoundedProblem, config: PatternSearchConfig) -> SearchResult:
    """
    Maximize the problem objective by compass search

    Polls ±mesh·e_i in coordinate order, moves to the best improving point
    (first in poll order on ties) and expands, otherwise contracts. Stops when
    the mesh falls below tolerance or the evaluation budget is spent.
    """
    x = np.asarray(config.initial_point, dtype=float)
    if x.shape != (problem.dimension,):
        raise InfeasibleStartError(f"Initial point has shape {x.shape}, problem dimension is {problem.dimension}")
    if not problem.contains(x):
        raise InfeasibleStartError(f"Initial point {x.tolist()} lies outside bounds")

    order = list(config.poll_order) if config.poll_order is not None else list(range(problem.dimension))
    span = float(np.max(np.asarray(problem.upper) - np.asarray(problem.lower))) if problem.dimension else 0.0
    mesh = config.initial_mesh

    executor = _executor_for(config.parallel_poll, config.max_workers)
    try:
        evaluator = _Evaluator(problem, config.max_evaluations, executor)
        best_Z, best_info = evaluator.evaluate([x])[0]
        history = [(0, mesh, best_Z)]
        iteration = 0

        while mesh >= config.mesh_tolerance and evaluator.remaining > 0:
            iteration += 1
            candidates: List[np.ndarray] = []
            seen = set()
            for i in order:
                for sign in (1.0, -1.0):
                    y = x.copy()
                    y[i] += sign * mesh
                    y = problem.clip(y)
                    key = tuple(float(v) for v in y)
                    if np.array_equal(y, x) or key in seen or key in evaluator.cache:
                        continue
                    seen.add(key)
                    candidates.append(y)
            candidates = candidates[:int(min(len(candidates), evaluator.remaining))]

            improved = False
            if candidates:
                outcomes = evaluator.evaluate(candidates)
                values = [z for z, _ in outcomes]
                winner = int(np.argmax(values))
                if values[winner] > best_Z:
                    x = candidates[winner]
                    best_Z, best_info = outcomes[winner]
                    improved = True

            if improved:
                mesh = min(mesh * config.expansion_factor, span) if span > 0 else mesh
            else:
                mesh *= config.contraction_factor
            history.append((iteration, mesh, best_Z))
            logger.debug(f"🔄 Poll {iteration}: mesh={mesh:.6g} best_Z={best_Z:.6g}")
    finally:
        if executor is not None:
            executor.shutdown()

    logger.info(f"✅ Pattern search finished: Z={best_Z:.6g} after {len(evaluator.records)} evaluations")
    return SearchResult(x, best_Z, best_info, history, evaluator.records)


def grid_scan(problem: BoundedProblem, config: GridScanConfig) -> GridScanResult:
    """Evaluate a uniform grid on the scalar bound interval, first best wins"""
    if problem.dimension != 1:
        raise OptimizerError(f"Grid scan needs a 1-dimensional problem, got {problem.dimension}")

    grid = np.linspace(problem.lower[0], problem.upper[0], config.steps)
    executor = _executor_for(config.parallel, config.max_workers)
    try:
        evaluator = _Evaluator(problem, None, executor)
        outcomes = evaluator.evaluate([np.array([p]) for p in grid])
    finally:
        if executor is not None:
            executor.shutdown()

    values = [z for z, _ in outcomes]
    best = int(np.argmax(values))
    curve = [(float(p), z, info) for p, (z, info) in zip(grid, outcomes)]
    logger.info(f"📊 Grid scan over {config.steps} points: best p={grid[best]:.6g}, Z={values[best]:.6g}")
    return GridScanResult(float(grid[best]), values[best], outcomes[best][1], curve, evaluator.records)


@dataclass
class SimulationObjective:
    """Picklable vector → (Z, ObjectiveBreakdown) contract backed by a full simulation"""
    network: Network
    demand: DemandModel
    sim_config: SimConfig
    policy: Policy
    layout: VectorLayout

    def __call__(self, x: np.ndarray) -> Tuple[float, ObjectiveBreakdown]:
        scheme = from_vector(self.layout, x)
        result = FreightSimulator(self.network, self.demand, self.sim_config).run(scheme)
        breakdown = EvaluationFramework(self.network, self.demand).objective(result, scheme, self.policy)
        return breakdown.Z, breakdown


@dataclass(frozen=True)
class OptimizeConfig:
    algo: str = PATTERN_SEARCH
    grid_steps: int = 26
    seed_grid_steps: int = 26
    initial_mesh: float = 0.05
    contraction_factor: float = 0.5
    expansion_factor: float = 2.0
    mesh_tolerance: float = 1e-4
    max_evaluations: int = 500
    parallel_poll: bool = False
    max_workers: int = 1
    intervals: int = 4   # time-varying grid size k


@dataclass
class Solution:
    layout: VectorLayout
    vector: Tuple[float, ...]
    Z: float
    breakdown: ObjectiveBreakdown
    evaluations: int

    def scheme(self):
        return from_vector(self.layout, self.vector)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'layout': self.layout.to_dict(),
            'vector': list(self.vector),
            'Z': self.Z,
            'scheme': self.scheme().to_dict(),
            'breakdown': self.breakdown.to_dict(),
            'evaluations': self.evaluations,
        }


@dataclass
class OptimizationReport:
    scheme_kind: str
    algo: str
    policy: str
    proportional: Solution
    best: Solution
    history: List[Tuple[int, float, float]] = field(default_factory=list)
    log: List[Tuple[str, EvaluationRecord]] = field(default_factory=list)
    wall_time_s: float = 0.0

    @property
    def total_evaluations(self) -> int:
        return len(self.log)

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        data = {
            'scheme_kind': self.scheme_kind,
            'algo': self.algo,
            'policy': self.policy,
            'proportional': self.proportional.to_dict(),
            'best': self.best.to_dict(),
            'total_evaluations': self.total_evaluations,
        }
        if include_timing:
            data['wall_time_s'] = self.wall_time_s
        return data


def optimize_scheme(scenario, scheme_kind: str, policy: Policy, algo_config: OptimizeConfig) -> OptimizationReport:
    """
    Optimize a TAC scheme for a scenario

    The proportional optimum is always found first by grid scan and seeds
    pattern search for the richer variants.
    """
    if scheme_kind not in (PROPORTIONAL, PATH_BASED, TIME_VARYING):
        raise OptimizerError(f"Unknown scheme kind '{scheme_kind}'")
    if algo_config.algo not in (PATTERN_SEARCH, GRID):
        raise OptimizerError(f"Unknown algorithm '{algo_config.algo}'")
    if algo_config.algo == GRID and scheme_kind != PROPORTIONAL:
        raise OptimizerError("Grid scan only applies to the proportional scheme")

    start_time = time.time()
    bounds = scenario.bounds
    sim_config = scenario.sim_config
    path_ids = scenario.network.path_ids()
    log: List[Tuple[str, EvaluationRecord]] = []

    def objective_for(layout: VectorLayout) -> SimulationObjective:
        return SimulationObjective(scenario.network, scenario.demand, sim_config, policy, layout)

    prop_layout = layout_for(PROPORTIONAL, (), bounds=bounds)
    steps = algo_config.grid_steps if algo_config.algo == GRID else algo_config.seed_grid_steps
    scan = grid_scan(
        BoundedProblem.box(1, bounds, objective_for(prop_layout)),
        GridScanConfig(steps, algo_config.parallel_poll, algo_config.max_workers),
    )
    log.extend(('grid', r) for r in scan.evaluations)
    proportional = Solution(prop_layout, (scan.best_p,), scan.best_Z, scan.best_info, scan.n_evaluations)
    history = [(i, 0.0, z) for i, z in enumerate(scan.history)]

    if algo_config.algo == GRID:
        best = proportional
    else:
        if scheme_kind == PROPORTIONAL:
            layout = prop_layout
        elif scheme_kind == PATH_BASED:
            layout = layout_for(PATH_BASED, path_ids, bounds=bounds)
        else:
            layout = layout_for(TIME_VARYING, path_ids, equal_grid(sim_config.t_max, algo_config.intervals), bounds)

        seed = [scan.best_p] * layout.dimension
        search = pattern_search(
            BoundedProblem.box(layout.dimension, bounds, objective_for(layout)),
            PatternSearchConfig(
                initial_point=seed,
                initial_mesh=algo_config.initial_mesh,
                contraction_factor=algo_config.contraction_factor,
                expansion_factor=algo_config.expansion_factor,
                mesh_tolerance=algo_config.mesh_tolerance,
                max_evaluations=algo_config.max_evaluations,
                parallel_poll=algo_config.parallel_poll,
                max_workers=algo_config.max_workers,
            ),
        )
        log.extend(('pattern-search', r) for r in search.evaluations)
        history = search.history
        best = Solution(layout, tuple(float(v) for v in search.best_vector), search.best_Z,
                        search.best_info, search.n_evaluations)

    wall_time = time.time() - start_time
    logger.info(
        f"✅ Optimized {scheme_kind} scheme under {policy.name}: Z={best.Z:.6g} "
        f"({len(log)} evaluations, {wall_time:.2f}s)"
    )
    return OptimizationReport(scheme_kind, algo_config.algo, policy.name, proportional, best, history, log, wall_time)
