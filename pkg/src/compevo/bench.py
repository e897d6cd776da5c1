"""Experiment harness: variants, repetitions, output files and the summary table."""
from __future__ import annotations

import csv
import json
import logging
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from . import graph as G
from .data import Dataset, parse_data_source, split_indices
from .errors import CompevoError, ConfigError
from .kinds import DEFAULT_CATALOG, ModelKind, TaskType
from .objectives import Individual, ObjectiveVector, PenaltyWeights, write_front_csv
from .optimizer import (
    FIXED_DEPTH,
    TRACE_COLUMNS,
    Budget,
    RunTrace,
    _genotype_seed,
    mo_best,
    quality,
    run_parameter_free,
    run_single_objective,
    run_steady_state_mo,
)

log = logging.getLogger(__name__)

SPREAD_LIMIT = 0.05

VARIANTS = {
    "exp1": ("single_objective", "single_objective_pt", "multi_objective"),
    "exp2": ("nsga2_selection", "spea2_selection"),
    "exp3": ("parameter_free_fd", "gpcomp_free", "steady_state_fd", "steady_state"),
    "baseline": ("bagged_trees", "constant", "linear"),
}

LABELS = {
    "single_objective": "Single-objective",
    "single_objective_pt": "Single-objective PT",
    "multi_objective": "Multi-objective",
    "nsga2_selection": "NSGA selection",
    "spea2_selection": "SPEA2 selection",
    "parameter_free_fd": "Parameter-free with FD",
    "gpcomp_free": "GPComp@Free",
    "steady_state_fd": "Steady-state with FD",
    "steady_state": "Steady-state",
    "bagged_trees": "Bagged trees",
    "constant": "Constant baseline",
    "linear": "Linear model",
}


class ExperimentSpec(BaseModel):
    """Experiment configuration; loadable from JSON, overridable from the command line."""

    experiment: Literal["exp1", "exp2", "exp3", "baseline"]
    data: str = Field(description="CSV path or synth:kind:n:noise[:seed]")
    task: Optional[str] = None
    target: str = "-1"
    repetitions: int = Field(10, ge=1)
    seed_base: int = 0
    seeds: Optional[list[int]] = None
    generations: Optional[int] = Field(30, ge=0)
    time_limit: Optional[float] = Field(None, gt=0)
    mu: int = Field(20, ge=1)
    mu_cap: int = Field(55, ge=2)
    fixed_depth: int = Field(FIXED_DEPTH, ge=1, le=G.DEPTH_HARD_CAP)
    penalty_w1: float = Field(0.01, ge=0)
    penalty_w2: float = Field(0.001, ge=0)
    use_time: bool = False
    train_fraction: float = Field(0.7, gt=0, lt=1)
    variants: Optional[list[str]] = None
    workers: int = Field(1, ge=1)
    out: Optional[str] = None

    @field_validator("task")
    @classmethod
    def _task_known(cls, v):
        if v is not None:
            TaskType.parse(v)
        return v

    @model_validator(mode="after")
    def _consistent(self):
        if self.seeds is None:
            self.seeds = [self.seed_base + r for r in range(self.repetitions)]
        if len(self.seeds) != self.repetitions:
            raise ValueError(f"{len(self.seeds)} seeds given for {self.repetitions} repetitions")
        if self.generations is None and self.time_limit is None:
            raise ValueError("set generations, time_limit, or both")
        if self.variants is not None:
            unknown = set(self.variants) - set(VARIANTS[self.experiment])
            if unknown:
                raise ValueError(f"unknown variants for {self.experiment}: {sorted(unknown)}")
        return self

    def variant_names(self) -> list[str]:
        names = VARIANTS[self.experiment]
        return [v for v in names if self.variants is None or v in self.variants]

    @property
    def budget(self) -> Budget:
        return Budget(self.generations, self.time_limit)


@dataclass
class RunResult:
    variant: str
    rep: int
    seed: int
    task: TaskType
    best: Individual
    test_quality: float  # as displayed: ROC AUC or RMSE
    gs: int
    gd: int
    hv: float | None
    n_front: int | None
    trace: RunTrace | None
    test_rows: list[int] = field(default_factory=list)
    wall_seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "rep": self.rep,
            "seed": self.seed,
            "task": self.task.value,
            "genotype": self.best.key,
            "validation_q": self.best.objectives.q,
            "test_quality": self.test_quality,
            "gs": self.gs,
            "gd": self.gd,
            "hv": self.hv,
            "n_front": self.n_front,
            "test_rows": self.test_rows,
        }


@dataclass
class SummaryRow:
    variant: str
    label: str
    runs: int
    quality: float
    quality_min: float
    quality_max: float
    spread: float
    gs: float
    gd: float
    hv: float | None
    n_front: float | None

    @property
    def spread_flag(self) -> bool:
        return self.spread > SPREAD_LIMIT

    @property
    def gs_gd(self) -> str:
        return f"{_fmt_num(self.gs)};{_fmt_num(self.gd)}"


@dataclass
class SummaryReport:
    experiment: str
    task: TaskType
    rows: list[SummaryRow]
    results: list[RunResult] = field(default_factory=list, repr=False)

    def row(self, variant: str) -> SummaryRow:
        return next(r for r in self.rows if r.variant == variant)


def _fmt_num(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def display_quality(task: TaskType, q: float) -> float:
    """Restore the reporting sign: ROC AUC is positive, RMSE stays as is."""
    return -q if task is TaskType.CLASSIFICATION else q


def final_rng(seed: int, key: str) -> np.random.Generator:
    return np.random.default_rng(_genotype_seed(seed + 7919, key))


def holdout_quality(graph: G.PipelineGraph, train: Dataset, test: Dataset, seed: int) -> float:
    """Refit on the whole training split and score on the held-out test split."""
    fitted = G.fit(graph, train, final_rng(seed, G.serialize(graph)))
    return display_quality(train.task, quality(train.task, test.target, G.predict(fitted, test.features)))


def _baseline_graph(variant: str, task: TaskType) -> G.PipelineGraph:
    if variant == "bagged_trees":
        return G.PipelineGraph.single(ModelKind.BAGGED_TREES)
    if variant == "constant":
        kind = ModelKind.MEAN_BASELINE if task is TaskType.REGRESSION else ModelKind.MAJORITY_BASELINE
        return G.PipelineGraph.single(kind)
    kind = ModelKind.LINEAR_REGRESSION if task is TaskType.REGRESSION else ModelKind.LOGISTIC_REGRESSION
    return G.PipelineGraph.single(kind)


def run_variant(
    variant: str,
    train: Dataset,
    test: Dataset,
    seed: int,
    spec: ExperimentSpec,
    catalog=DEFAULT_CATALOG,
) -> RunResult:
    start = time.perf_counter()
    budget = spec.budget
    common = {"use_time": spec.use_time, "workers": spec.workers}
    trace = None
    archive = None
    if variant in VARIANTS["baseline"]:
        g = _baseline_graph(variant, train.task)
        best = Individual(g, ObjectiveVector(0.0, 1.0), 0.0, G.serialize(g))
    elif variant in ("single_objective", "single_objective_pt"):
        penalty = PenaltyWeights(spec.penalty_w1, spec.penalty_w2) if variant.endswith("_pt") else None
        best, trace = run_single_objective(
            train, catalog, budget, seed, penalty=penalty, mu=spec.mu, max_depth=spec.fixed_depth, **common
        )
        archive = trace.archive
    elif variant in ("multi_objective", "gpcomp_free", "spea2_selection", "nsga2_selection", "parameter_free_fd"):
        selection = "nsga2" if variant == "nsga2_selection" else "spea2"
        fixed = spec.fixed_depth if variant == "parameter_free_fd" else None
        archive, trace = run_parameter_free(
            train, catalog, budget, seed, selection=selection, fixed_depth=fixed, mu_cap=spec.mu_cap, **common
        )
    elif variant in ("steady_state", "steady_state_fd"):
        fixed = spec.fixed_depth if variant == "steady_state_fd" else None
        archive, trace = run_steady_state_mo(train, catalog, budget, seed, mu=spec.mu, fixed_depth=fixed, **common)
    else:
        raise ConfigError(f"unknown variant {variant!r}")
    if archive is not None and variant not in ("single_objective", "single_objective_pt"):
        best = mo_best(archive)
    quality_value = holdout_quality(best.graph, train, test, seed)
    return RunResult(
        variant=variant,
        rep=-1,
        seed=seed,
        task=train.task,
        best=best,
        test_quality=quality_value,
        gs=G.size(best.graph),
        gd=G.depth(best.graph),
        hv=trace.final_hv() if trace else None,
        n_front=len(archive) if archive is not None else None,
        trace=trace,
        wall_seconds=time.perf_counter() - start,
    )


def load_spec_data(spec: ExperimentSpec) -> Dataset:
    return parse_data_source(spec.data, spec.target, spec.task)


def split_for_seed(data: Dataset, seed: int, train_fraction: float) -> tuple[np.ndarray, np.ndarray]:
    return split_indices(data.target, data.task, train_fraction, np.random.default_rng(seed))


def run_experiment(
    spec: ExperimentSpec,
    data: Dataset | None = None,
    progress: Callable[[str], None] | None = None,
) -> SummaryReport:
    """Run every variant for every seed; write outputs when ``spec.out`` is set."""
    data = data if data is not None else load_spec_data(spec)
    results: list[RunResult] = []
    for rep, seed in enumerate(spec.seeds):
        tr_rows, te_rows = split_for_seed(data, seed, spec.train_fraction)
        train, test = data.take(tr_rows), data.take(te_rows)
        for variant in spec.variant_names():
            try:
                res = run_variant(variant, train, test, seed, spec)
            except CompevoError as exc:
                exc.args = (f"{variant} rep {rep} (seed {seed}): {exc}",)
                raise
            res.rep = rep
            res.test_rows = [int(i) for i in te_rows]
            results.append(res)
            if progress:
                progress(f"{variant} rep {rep} seed {seed}: quality {res.test_quality:.4f} "
                         f"Gs;Gd {res.gs};{res.gd} ({res.wall_seconds:.1f}s)")
    report = SummaryReport(spec.experiment, data.task, summarize(results), results)
    if spec.out:
        write_outputs(spec, report)
    return report


def summarize(results: list[RunResult]) -> list[SummaryRow]:
    rows = []
    variants = list(dict.fromkeys(r.variant for r in results))
    for v in variants:
        rs = [r for r in results if r.variant == v]
        qs = [r.test_quality for r in rs]
        med = statistics.median(qs)
        spread = (max(qs) - min(qs)) / abs(med) if med else 0.0
        hvs = [r.hv for r in rs if r.hv is not None]
        nfs = [r.n_front for r in rs if r.n_front is not None]
        rows.append(
            SummaryRow(
                variant=v,
                label=LABELS.get(v, v),
                runs=len(rs),
                quality=med,
                quality_min=min(qs),
                quality_max=max(qs),
                spread=spread,
                gs=statistics.median(r.gs for r in rs),
                gd=statistics.median(r.gd for r in rs),
                hv=statistics.median(hvs) if hvs else None,
                n_front=statistics.median(nfs) if nfs else None,
            )
        )
    return rows


SUMMARY_COLUMNS = (
    "variant", "label", "runs", "quality", "quality_min", "quality_max",
    "spread", "spread_over_5pct", "gs_gd", "hv", "n_front",
)


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_summary_csv(rows: list[SummaryRow], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in rows:
            w.writerow([_cell(x) for x in (
                r.variant, r.label, r.runs, float(r.quality), float(r.quality_min), float(r.quality_max),
                float(r.spread), r.spread_flag, r.gs_gd,
                None if r.hv is None else float(r.hv),
                None if r.n_front is None else _fmt_num(r.n_front),
            )])


def write_trace_csv(trace: RunTrace, path: Path, task: TaskType, with_time: bool) -> None:
    """One row per generation; ``elapsed_s`` is left blank for generation-capped runs."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace.records:
            w.writerow([
                r.gen, repr(float(display_quality(task, r.best_q))), repr(float(r.hv)), r.mu, r.lam,
                repr(float(r.cross_rate)), repr(float(r.mut_rate)), r.max_depth,
                repr(round(r.elapsed_s, 6)) if with_time else "",
            ])


def write_outputs(spec: ExperimentSpec, report: SummaryReport) -> Path:
    out = Path(spec.out)
    for sub in ("traces", "pareto", "finals"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    (out / "spec.json").write_text(json.dumps(spec.model_dump(), indent=2, sort_keys=True) + "\n")
    timings = {}
    for res in report.results:
        stem = f"{res.variant}_rep{res.rep}"
        if res.trace is not None:
            write_trace_csv(res.trace, out / "traces" / f"{stem}.csv", res.task, spec.time_limit is not None)
            write_front_csv(res.trace.archive.entries, out / "pareto" / f"{stem}.csv")
            timings[stem] = {
                "wall_seconds": res.wall_seconds,
                "elapsed_s": [r.elapsed_s for r in res.trace.records],
            }
        else:
            timings[stem] = {"wall_seconds": res.wall_seconds}
        (out / "finals" / f"{stem}.json").write_text(json.dumps(res.to_json(), indent=2, sort_keys=True) + "\n")
    write_summary_csv(report.rows, out / "summary.csv")
    (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
    return out


def recompute_final_quality(out_dir: str | Path, variant: str, rep: int) -> float:
    """Re-derive a stored run's test quality from its saved genotype and test rows."""
    out = Path(out_dir)
    spec = ExperimentSpec.model_validate_json((out / "spec.json").read_text())
    final = json.loads((out / "finals" / f"{variant}_rep{rep}.json").read_text())
    data = load_spec_data(spec)
    test_rows = np.array(final["test_rows"], dtype=int)
    train_rows = np.setdiff1d(np.arange(data.n_samples), test_rows)
    graph = G.deserialize(final["genotype"])
    return holdout_quality(graph, data.take(train_rows), data.take(test_rows), final["seed"])
