"""Evolutionary loops over composite pipelines.

Three drivers share one evaluator:

* :func:`run_parameter_free` - the self-configuring multi-objective scheme
  (Fibonacci population sizing, diversity-driven operator rates, depth
  adaptation after stagnation);
* :func:`run_steady_state_mo` - a fixed-parameter (mu + lambda) multi-objective GP;
* :func:`run_single_objective` - tournament-based (mu + lambda) GP on quality or
  on a penalised scalar fitness.
"""
from __future__ import annotations

import hashlib
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import graph as G
from .data import Dataset, split_indices
from .errors import BudgetTooSmall, ConfigError, DataError
from .graph import PipelineGraph
from .kinds import DEFAULT_CATALOG, ModelKind, TaskType
from .objectives import (
    Individual,
    Normalizer,
    ObjectiveVector,
    ParetoArchive,
    PenaltyWeights,
    pareto_update,
    penalty_fitness,
    rmse,
    roc_auc,
)
from .operators import Population, nsga2_select, reproduce, spea2_select, tournament_select

log = logging.getLogger(__name__)

STAGNATION_THRESHOLD = 5
INITIAL_MAX_DEPTH = 2
FIXED_DEPTH = 3
IMPROVEMENT_TOL = 1e-12
VALIDATION_FRACTION = 0.25

SELECTORS = {"spea2": spea2_select, "nsga2": nsga2_select}


# --- Fibonacci population sizing ----------------------------------------------


class FibonacciIterator:
    """Walks the sequence 1, 2, 3, 5, 8, ... up to ``cap``; both ends saturate."""

    def __init__(self, cap: int = 55):
        seq = [1, 2]
        while seq[-1] + seq[-2] <= cap:
            seq.append(seq[-1] + seq[-2])
        self.items = tuple(x for x in seq if x <= cap)

    def state_by_index(self, index: int) -> int:
        """1-based access: index 2 is the second item."""
        return self.items[min(max(index, 1), len(self.items)) - 1]

    def _pos(self, value: int) -> int:
        try:
            return self.items.index(value)
        except ValueError:
            raise ValueError(f"{value} is not in the sequence {self.items}") from None

    def next(self, value: int) -> int:
        return self.items[min(self._pos(value) + 1, len(self.items) - 1)]

    def prev(self, value: int) -> int:
        return self.items[max(self._pos(value) - 1, 0)]

    def __contains__(self, value: int) -> bool:
        return value in self.items


@dataclass(frozen=True)
class AdaptiveState:
    mu: int
    lam: int
    cross_rate: float = 0.5
    mut_rate: float = 0.5
    max_depth: int = INITIAL_MAX_DEPTH
    stagnation_cnt: int = 0
    current_std: float = 0.0
    max_std: float = 0.0


def quality_std(pop) -> float:
    """Population standard deviation of the quality objective."""
    q = [m.objectives.q for m in pop]
    return float(np.std(q)) if q else 0.0


def depth_adaptation(
    state: AdaptiveState,
    archive_changed: bool,
    threshold: int = STAGNATION_THRESHOLD,
    hard_cap: int = G.DEPTH_HARD_CAP,
) -> AdaptiveState:
    cnt = 0 if archive_changed else state.stagnation_cnt + 1
    depth = state.max_depth
    if cnt >= threshold:
        depth = min(depth + 1, hard_cap)
        cnt = 0
    return replace(state, stagnation_cnt=cnt, max_depth=depth)


def _improved(offspring_objs: Sequence[ObjectiveVector], archive: ParetoArchive) -> tuple[bool, bool]:
    if not offspring_objs or not len(archive):
        return bool(offspring_objs), bool(offspring_objs)
    best_q = min(v.q for v in archive.vectors())
    best_s = min(v.s for v in archive.vectors())
    q_up = min(v.q for v in offspring_objs) < best_q - IMPROVEMENT_TOL
    s_up = min(v.s for v in offspring_objs) < best_s - IMPROVEMENT_TOL
    return q_up, s_up


def adapted_evo_params(
    offspring_objs: Sequence[ObjectiveVector],
    archive: ParetoArchive,
    state: AdaptiveState,
    seq: FibonacciIterator | None = None,
    mu_min: int = 2,
) -> AdaptiveState:
    """Grow mu and re-balance rates on no improvement; shrink mu when both objectives improve."""
    seq = seq or FibonacciIterator()
    q_up, s_up = _improved(offspring_objs, archive)
    if not q_up and not s_up:
        changes = {"mu": seq.next(state.mu)}
        if state.max_std > 0:
            ratio = state.current_std / state.max_std
            changes.update(mut_rate=1.0 - ratio, cross_rate=ratio)
        return replace(state, **changes)
    if q_up and s_up:
        smaller = seq.prev(state.mu)
        return replace(state, mu=smaller if smaller >= mu_min else state.mu)
    return state


# --- evaluation -------------------------------------------------------------


def _genotype_seed(seed: int, key: str) -> list[int]:
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return [seed & 0xFFFFFFFF, int.from_bytes(digest, "little")]


def quality(task: TaskType, y: np.ndarray, pred: np.ndarray) -> float:
    """Minimised quality: RMSE, or negated ROC AUC."""
    return rmse(y, pred) if task is TaskType.REGRESSION else -roc_auc(y, pred)


class Evaluator:
    """Fits genotypes on an inner training split and scores them on a validation split.

    Results are cached per genotype; the fitting rng is derived from the run
    seed and the genotype text, so caching and thread-parallel evaluation do
    not change any result.
    """

    def __init__(
        self,
        data: Dataset,
        seed: int,
        *,
        use_time: bool = False,
        val_fraction: float = VALIDATION_FRACTION,
        workers: int = 1,
    ):
        if data.n_samples < 8:
            raise DataError("need at least 8 training samples for an inner validation split")
        fit_idx, val_idx = split_indices(
            data.target, data.task, 1.0 - val_fraction, np.random.default_rng([seed, 1])
        )
        self.task = data.task
        self.seed = seed
        self.X_fit, self.y_fit = data.features[fit_idx], data.target[fit_idx]
        self.X_val, self.y_val = data.features[val_idx], data.target[val_idx]
        self.use_time = use_time
        self.workers = workers
        self.cache: dict[str, tuple[float, float]] = {}
        self.evaluations = 0
        self.history: list[ObjectiveVector] = []

    def _score(self, graph: PipelineGraph, key: str) -> tuple[float, float]:
        rng = np.random.default_rng(_genotype_seed(self.seed, key))
        fitted = G.fit_arrays(graph, self.X_fit, self.y_fit, self.task, rng)
        pred = G.predict(fitted, self.X_val)
        if not np.all(np.isfinite(pred)):
            if self.task is TaskType.CLASSIFICATION:
                return 0.0, fitted.fit_seconds
            pred = np.full_like(self.y_val, self.y_fit.mean())
        return quality(self.task, self.y_val, pred), fitted.fit_seconds

    def __call__(self, graphs: Sequence[PipelineGraph]) -> list[Individual]:
        keys = [G.serialize(g) for g in graphs]
        todo: dict[str, PipelineGraph] = {}
        for g, k in zip(graphs, keys):
            if k not in self.cache and k not in todo:
                todo[k] = g
        if todo:
            items = list(todo.items())
            if self.workers > 1 and len(items) > 1:
                with ThreadPoolExecutor(self.workers) as pool:
                    results = list(pool.map(lambda kv: self._score(kv[1], kv[0]), items))
            else:
                results = [self._score(g, k) for k, g in items]
            for (k, _), r in zip(items, results):
                self.cache[k] = r
        out = []
        for g, k in zip(graphs, keys):
            q, secs = self.cache[k]
            vec = ObjectiveVector(q, float(G.size(g)), secs if self.use_time else None)
            out.append(Individual(g, vec, secs, k))
            self.history.append(vec)
        self.evaluations += len(graphs)
        return out


# --- budget and trace -------------------------------------------------------


@dataclass(frozen=True)
class Budget:
    generation_limit: int | None = 30
    time_limit: float | None = None

    def __post_init__(self):
        if self.generation_limit is None and self.time_limit is None:
            raise ConfigError("a budget needs a generation limit, a time limit, or both")
        if self.generation_limit is not None and self.generation_limit < 0:
            raise ConfigError("generation limit must be non-negative")

    def allows(self, generation: int, elapsed: float) -> bool:
        if self.generation_limit is not None and generation >= self.generation_limit:
            return False
        return self.time_limit is None or elapsed < self.time_limit


@dataclass
class GenerationRecord:
    gen: int
    best_q: float
    hv: float
    mu: int
    lam: int
    cross_rate: float
    mut_rate: float
    max_depth: int
    elapsed_s: float
    evaluations: int
    front: list[tuple[float, ...]] = field(default_factory=list, repr=False)


@dataclass
class RunTrace:
    records: list[GenerationRecord] = field(default_factory=list)
    normalizer: Normalizer | None = None
    archive: ParetoArchive = field(default_factory=ParetoArchive)
    evaluations: int = 0
    initial_front: list[tuple[float, ...]] = field(default_factory=list, repr=False)

    def hv_series(self) -> list[float]:
        return [r.hv for r in self.records]

    def final_hv(self) -> float:
        if self.normalizer is None:
            return 0.0
        return float(self.normalizer.hypervolume(self.archive.vectors()))


TRACE_COLUMNS = ("gen", "best_q", "hv", "mu", "lambda", "cross_rate", "mut_rate", "max_depth", "elapsed_s")


def _finalize(trace: RunTrace, evaluator: Evaluator, archive: ParetoArchive) -> RunTrace:
    """Fix normalisation bounds over every evaluation of the run, then fill in HV."""
    trace.archive = archive
    trace.evaluations = evaluator.evaluations
    trace.normalizer = Normalizer.fit(evaluator.history)
    for rec in trace.records:
        rec.hv = float(trace.normalizer.hypervolume(rec.front))
    return trace


def _record(trace, gen, book, state: AdaptiveState, start, evaluator) -> None:
    trace.records.append(
        GenerationRecord(
            gen=gen,
            best_q=min(v.q for v in book.vectors()),
            hv=float("nan"),
            mu=state.mu,
            lam=state.lam,
            cross_rate=state.cross_rate,
            mut_rate=state.mut_rate,
            max_depth=state.max_depth,
            elapsed_s=time.perf_counter() - start,
            evaluations=evaluator.evaluations,
            front=[v.values() for v in book.vectors()],
        )
    )


def _init_population(catalog, task, size, max_depth, rng) -> list[PipelineGraph]:
    return [G.random_pipeline(catalog, task, max_depth, rng) for _ in range(size)]


# --- multi-objective drivers --------------------------------------------------


def _evolve_mo(
    data: Dataset,
    catalog: Sequence[ModelKind],
    budget: Budget,
    seed: int,
    *,
    selection: str,
    adaptive_params: bool,
    adaptive_depth: bool,
    initial_depth: int,
    mu: int | None,
    mu_cap: int,
    use_time: bool,
    workers: int,
    on_generation: Callable[[GenerationRecord], None] | None,
) -> tuple[ParetoArchive, RunTrace]:
    if selection not in SELECTORS:
        raise ConfigError(f"unknown selection {selection!r}; choose from {sorted(SELECTORS)}")
    select = SELECTORS[selection]
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    evaluator = Evaluator(data, seed, use_time=use_time, workers=workers)
    seq = FibonacciIterator(mu_cap)
    task = data.task

    if adaptive_params:
        pop_size = seq.state_by_index(2)
        state = AdaptiveState(mu=pop_size, lam=seq.prev(pop_size), max_depth=initial_depth)
    else:
        state = AdaptiveState(mu=mu, lam=mu, max_depth=initial_depth)

    pop = evaluator(_init_population(catalog, task, state.mu, state.max_depth, rng))
    std = quality_std(pop)
    state = replace(state, current_std=std, max_std=std)
    pareto = ParetoArchive()  # drives adaptation
    book, _ = pareto_update(ParetoArchive(), pop)  # every evaluation; reported
    trace = RunTrace(initial_front=[v.values() for v in book.vectors()])

    gen = 0
    while budget.allows(gen, time.perf_counter() - start):
        lam = seq.prev(state.mu) if adaptive_params else state.lam
        state = replace(state, lam=lam)
        in_effect = state  # the row for this generation reports the settings it ran with
        pareto, changed = pareto_update(pareto, pop)
        parents = select(pop, lam)
        offspring = evaluator(
            reproduce(
                [p.graph for p in parents], lam, state.cross_rate, state.mut_rate,
                state.max_depth, catalog, task, rng,
            )
        )
        if adaptive_depth:
            state = depth_adaptation(state, changed)
        if adaptive_params:
            state = adapted_evo_params([o.objectives for o in offspring], pareto, state, seq)
        pop = select(pop + offspring, state.mu)
        std = quality_std(pop)
        state = replace(state, current_std=std, max_std=max(state.max_std, std))
        book, _ = pareto_update(book, offspring)
        gen += 1
        _record(trace, gen, book, in_effect, start, evaluator)
        if on_generation:
            on_generation(trace.records[-1])
        log.debug("gen %d mu=%d lam=%d depth=%d best_q=%.4f", gen, state.mu, lam, state.max_depth,
                  trace.records[-1].best_q)

    if budget.generation_limit != 0 and gen == 0:
        raise BudgetTooSmall("the budget ran out before the first generation completed")
    return book, _finalize(trace, evaluator, book)


def run_parameter_free(
    data: Dataset,
    catalog: Sequence[ModelKind] = DEFAULT_CATALOG,
    budget: Budget = Budget(),
    seed: int = 0,
    *,
    selection: str = "spea2",
    fixed_depth: int | None = None,
    mu_cap: int = 55,
    use_time: bool = False,
    workers: int = 1,
    on_generation=None,
) -> tuple[ParetoArchive, RunTrace]:
    """Self-configuring multi-objective GP; ``fixed_depth`` disables depth adaptation."""
    return _evolve_mo(
        data, catalog, budget, seed,
        selection=selection,
        adaptive_params=True,
        adaptive_depth=fixed_depth is None,
        initial_depth=fixed_depth or INITIAL_MAX_DEPTH,
        mu=None,
        mu_cap=mu_cap,
        use_time=use_time,
        workers=workers,
        on_generation=on_generation,
    )


def run_steady_state_mo(
    data: Dataset,
    catalog: Sequence[ModelKind] = DEFAULT_CATALOG,
    budget: Budget = Budget(),
    seed: int = 0,
    *,
    mu: int = 20,
    selection: str = "spea2",
    fixed_depth: int | None = None,
    use_time: bool = False,
    workers: int = 1,
    on_generation=None,
) -> tuple[ParetoArchive, RunTrace]:
    """Fixed-rate (mu + mu) multi-objective GP; without ``fixed_depth`` depth adapts from 2."""
    if mu < 1:
        raise ConfigError("population size must be positive")
    return _evolve_mo(
        data, catalog, budget, seed,
        selection=selection,
        adaptive_params=False,
        adaptive_depth=fixed_depth is None,
        initial_depth=fixed_depth or INITIAL_MAX_DEPTH,
        mu=mu,
        mu_cap=55,
        use_time=use_time,
        workers=workers,
        on_generation=on_generation,
    )


# --- single-objective driver --------------------------------------------------


def run_single_objective(
    data: Dataset,
    catalog: Sequence[ModelKind] = DEFAULT_CATALOG,
    budget: Budget = Budget(),
    seed: int = 0,
    *,
    penalty: PenaltyWeights | None = None,
    mu: int = 20,
    max_depth: int = FIXED_DEPTH,
    tour_size: int = 2,
    cross_rate: float = 0.5,
    mut_rate: float = 0.5,
    use_time: bool = False,
    workers: int = 1,
    on_generation=None,
) -> tuple[Individual, RunTrace]:
    """(mu + mu) GP with tournament selection on quality or on the penalised fitness."""
    if mu < 1:
        raise ConfigError("population size must be positive")
    _check_rates(cross_rate, mut_rate)
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    evaluator = Evaluator(data, seed, use_time=use_time, workers=workers)
    task = data.task
    if penalty is None:
        def fitness(ind: Individual) -> float:
            return ind.objectives.q
    else:
        def fitness(ind: Individual) -> float:
            return penalty_fitness(ind.objectives, penalty)

    def rank(members: list[Individual]) -> list[Individual]:
        order = sorted(range(len(members)), key=lambda i: (fitness(members[i]), i))
        return [members[i] for i in order]

    state = AdaptiveState(mu=mu, lam=mu, cross_rate=cross_rate, mut_rate=mut_rate, max_depth=max_depth)
    pop = evaluator(_init_population(catalog, task, mu, max_depth, rng))
    best = rank(pop)[0]
    book, _ = pareto_update(ParetoArchive(), pop)
    trace = RunTrace(initial_front=[v.values() for v in book.vectors()])

    gen = 0
    while budget.allows(gen, time.perf_counter() - start):
        parents = tournament_select(pop, mu, tour_size, rng, fitness)
        offspring = evaluator(
            reproduce([p.graph for p in parents], mu, cross_rate, mut_rate, max_depth, catalog, task, rng)
        )
        pop = rank(pop + offspring)[:mu]
        if fitness(pop[0]) < fitness(best):
            best = pop[0]
        book, _ = pareto_update(book, offspring)
        gen += 1
        _record(trace, gen, book, state, start, evaluator)
        if on_generation:
            on_generation(trace.records[-1])

    if budget.generation_limit != 0 and gen == 0:
        raise BudgetTooSmall("the budget ran out before the first generation completed")
    return best, _finalize(trace, evaluator, book)


def mo_best(archive: ParetoArchive) -> Individual:
    """Best-quality archive member; ties go to the smaller graph."""
    return min(archive.entries, key=lambda e: (e.objectives.q, e.objectives.s, e.key))


def _check_rates(*rates: float) -> None:
    for r in rates:
        if not (0.0 <= r <= 1.0) or math.isnan(r):
            raise ConfigError(f"rate {r} outside [0, 1]")
