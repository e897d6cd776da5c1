"""Objective criteria, Pareto dominance and archive, hypervolume, penalty scalarisation.

Every objective is minimised: quality is RMSE or the negated ROC AUC,
structural complexity is the node count, performance is fit wall time.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ArityMismatch, LengthMismatch, PointBeyondReference, SingleClass
from .graph import PipelineGraph, serialize

HV_REFERENCE = 1.01


@dataclass(frozen=True)
class ObjectiveVector:
    q: float
    s: float
    p: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.s)):
            raise ValueError(f"objective components must be finite: {self}")
        if self.s < 1:
            raise ValueError("structural complexity is at least one node")
        if self.p is not None and not (math.isfinite(self.p) and self.p >= 0):
            raise ValueError("fit time must be finite and non-negative")

    def values(self) -> tuple[float, ...]:
        return (self.q, self.s) if self.p is None else (self.q, self.s, self.p)


@dataclass(frozen=True)
class PenaltyWeights:
    w1: float = 0.01
    w2: float = 0.001

    def __post_init__(self):
        if not (self.w1 >= 0 and self.w2 >= 0 and math.isfinite(self.w1) and math.isfinite(self.w2)):
            raise ValueError("penalty weights must be finite and non-negative")


@dataclass(frozen=True)
class Individual:
    graph: PipelineGraph
    objectives: ObjectiveVector
    fit_seconds: float = 0.0
    key: str = ""

    @classmethod
    def of(cls, graph: PipelineGraph, objectives: ObjectiveVector, fit_seconds: float = 0.0) -> "Individual":
        return cls(graph, objectives, fit_seconds, serialize(graph))


# --- metrics --------------------------------------------------------------


def rmse(y: Sequence[float], yhat: Sequence[float]) -> float:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.size == 0:
        raise LengthMismatch(f"lengths {y.size} and {yhat.size} must match and be non-zero")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def roc_auc(y: Sequence[float], scores: Sequence[float]) -> float:
    """Mann-Whitney AUC: chance a random positive outranks a random negative, ties count half."""
    y = np.asarray(y, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if y.shape != scores.shape:
        raise LengthMismatch("labels and scores differ in length")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def penalty_fitness(v: ObjectiveVector, w: PenaltyWeights) -> float:
    """q + w1*s + w2*p, minimised; the time term is skipped when p is absent."""
    f = v.q + w.w1 * v.s
    if v.p is not None:
        f += w.w2 * v.p
    return f


# --- dominance and archive ------------------------------------------------


def _vals(v) -> tuple[float, ...]:
    return v.values() if isinstance(v, ObjectiveVector) else tuple(float(x) for x in v)


def dominates(a, b) -> bool:
    """Strict Pareto dominance under minimisation."""
    va, vb = _vals(a), _vals(b)
    if len(va) != len(vb):
        raise ArityMismatch(f"cannot compare {len(va)} and {len(vb)} objectives")
    return all(x <= y for x, y in zip(va, vb)) and any(x < y for x, y in zip(va, vb))


def non_dominated_mask(points: np.ndarray) -> np.ndarray:
    """Boolean mask of rows not dominated by any other row."""
    P = np.asarray(points, dtype=float)
    if len(P) == 0:
        return np.zeros(0, dtype=bool)
    le = (P[:, None, :] <= P[None, :, :]).all(axis=2)
    lt = (P[:, None, :] < P[None, :, :]).any(axis=2)
    dominated_by = le & lt  # [i, j]: i dominates j
    return ~dominated_by.any(axis=0)


@dataclass
class ParetoArchive:
    entries: list[Individual] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def keys(self) -> set[str]:
        return {e.key for e in self.entries}

    def vectors(self) -> list[ObjectiveVector]:
        return [e.objectives for e in self.entries]

    def minima(self) -> tuple[float, ...]:
        return tuple(np.min([v.values() for v in self.vectors()], axis=0)) if self.entries else ()

    def sorted_entries(self) -> list[Individual]:
        return sorted(self.entries, key=lambda e: (e.objectives.values(), e.key))


def pareto_update(archive: ParetoArchive, candidates: Iterable[Individual]) -> tuple[ParetoArchive, bool]:
    """Non-dominated subset of archive and candidates; reports whether membership changed."""
    pool = list(archive.entries)
    seen = archive.keys()
    for c in candidates:
        if c.key not in seen:
            pool.append(c)
            seen.add(c.key)
    if not pool:
        return ParetoArchive([]), False
    mask = non_dominated_mask(np.array([e.objectives.values() for e in pool]))
    kept = [e for e, m in zip(pool, mask) if m]
    changed = {e.key for e in kept} != archive.keys()
    return ParetoArchive(kept), changed


# --- hypervolume ----------------------------------------------------------


def _hv2d(points: np.ndarray, ref: Sequence[float]) -> float:
    if len(points) == 0:
        return 0.0
    order = np.lexsort((points[:, 1], points[:, 0]))
    hv = 0.0
    best_y = ref[1]
    for x, y in points[order]:
        if y < best_y:
            hv += (ref[0] - x) * (best_y - y)
            best_y = y
    return hv


def hypervolume(front, ref) -> float:
    """Exact dominated volume for 2 or 3 objectives (sweep / slice-and-sweep)."""
    ref = np.asarray(_vals(ref), dtype=float)
    pts = np.array([_vals(p) for p in front], dtype=float).reshape(-1, len(ref))
    if len(ref) not in (2, 3):
        raise ArityMismatch("hypervolume supports 2 or 3 objectives")
    for i, p in enumerate(pts):
        if not np.all(p < ref):
            raise PointBeyondReference(i, p)
    if len(pts) == 0:
        return 0.0
    if len(ref) == 2:
        return _hv2d(pts, ref)
    pts = pts[np.argsort(pts[:, 2], kind="stable")]
    hv = 0.0
    for i in range(len(pts)):
        top = pts[i + 1, 2] if i + 1 < len(pts) else ref[2]
        if top > pts[i, 2]:
            hv += _hv2d(pts[: i + 1, :2], ref[:2]) * (top - pts[i, 2])
    return hv


@dataclass(frozen=True)
class Normalizer:
    """Maps objectives into [0, 1] using bounds observed over a run."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    @classmethod
    def fit(cls, vectors: Iterable) -> "Normalizer":
        arr = np.array([_vals(v) for v in vectors], dtype=float)
        return cls(tuple(arr.min(axis=0)), tuple(arr.max(axis=0)))

    def __call__(self, v) -> tuple[float, ...]:
        out = []
        for x, lo, hi in zip(_vals(v), self.lower, self.upper):
            out.append(0.0 if hi <= lo else (x - lo) / (hi - lo))
        return tuple(out)

    def hypervolume(self, front: Iterable) -> float:
        pts = [self(v) for v in front]
        return hypervolume(pts, (HV_REFERENCE,) * len(self.lower))


# --- export ---------------------------------------------------------------


def write_front_csv(entries: Sequence[Individual], path: str | Path) -> None:
    entries = sorted(entries, key=lambda e: (e.objectives.values(), e.key))
    n_obj = len(entries[0].objectives.values()) if entries else 2
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"objective_{i}" for i in range(n_obj)] + ["genotype_json"])
        for e in entries:
            w.writerow([repr(float(x)) for x in e.objectives.values()] + [e.key])


def read_front_csv(path: str | Path) -> list[tuple[tuple[float, ...], str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        objs = tuple(float(row[k]) for k in sorted(row) if k.startswith("objective_"))
        out.append((objs, row["genotype_json"]))
    return out
