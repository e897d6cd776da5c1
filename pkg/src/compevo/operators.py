"""Selection, crossover and mutation over pipeline genotypes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import graph as G
from .graph import NodeSpec, PipelineGraph
from .kinds import ModelKind, TaskType, compatible_kinds
from .objectives import Individual

CROSSOVER_RETRIES = 10
MUTATION_KINDS = ("simple", "growth", "reduce")
CROSSOVER_KINDS = ("subtree", "one_point")


@dataclass
class Population:
    members: list[Individual] = field(default_factory=list)
    generation: int = 0

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def _members(pop) -> list[Individual]:
    return list(pop.members) if isinstance(pop, Population) else list(pop)


def _matrix(members: Sequence[Individual]) -> np.ndarray:
    return np.array([m.objectives.values() for m in members], dtype=float)


def _tie_order(V: np.ndarray) -> list[int]:
    """Indices ordered by (objectives lexicographic, insertion index)."""
    return sorted(range(len(V)), key=lambda i: (tuple(V[i]), i))


# --- single-objective selection -------------------------------------------


def tournament_select(
    pop,
    k: int,
    tour_size: int,
    rng: np.random.Generator,
    fitness: Callable[[Individual], float] | None = None,
) -> list[Individual]:
    """``k`` independent tournaments on a minimised scalar fitness.

    Contestants are drawn with replacement, except that a tournament at least
    as large as the population simply contains every member.
    """
    members = _members(pop)
    if not members:
        raise ValueError("cannot select from an empty population")
    fitness = fitness or (lambda ind: ind.objectives.q)
    scores = [fitness(m) for m in members]
    n = len(members)
    out = []
    for _ in range(k):
        entrants = range(n) if tour_size >= n else rng.integers(0, n, tour_size)
        best = min(entrants, key=lambda i: (scores[i], i))
        out.append(members[best])
    return out


# --- NSGA-II ----------------------------------------------------------------


def non_dominated_fronts(V: np.ndarray) -> list[list[int]]:
    """Fast non-dominated sorting; each front lists indices in insertion order."""
    n = len(V)
    if n == 0:
        return []
    le = (V[:, None, :] <= V[None, :, :]).all(axis=2)
    lt = (V[:, None, :] < V[None, :, :]).any(axis=2)
    dom = le & lt
    counts = dom.sum(axis=0)
    fronts = []
    current = [i for i in range(n) if counts[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in np.flatnonzero(dom[i]):
                counts[j] -= 1
                if counts[j] == 0:
                    nxt.append(int(j))
        current = sorted(nxt)
    return fronts


def crowding_distance(V: np.ndarray) -> np.ndarray:
    n, m = V.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(V[:, j], kind="stable")
        lo, hi = V[order[0], j], V[order[-1], j]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi > lo:
            dist[order[1:-1]] += (V[order[2:], j] - V[order[:-2], j]) / (hi - lo)
    return dist


def nsga2_select(pop, k: int) -> list[Individual]:
    members = _members(pop)
    if k >= len(members):
        return members
    V = _matrix(members)
    chosen: list[int] = []
    for front in non_dominated_fronts(V):
        if len(chosen) + len(front) <= k:
            chosen.extend(front)
            continue
        cd = crowding_distance(V[front])
        ranked = sorted(range(len(front)), key=lambda i: (-cd[i], tuple(V[front[i]]), front[i]))
        chosen.extend(front[i] for i in ranked[: k - len(chosen)])
        break
    return [members[i] for i in chosen]


# --- SPEA2 ------------------------------------------------------------------


def _normalized(V: np.ndarray) -> np.ndarray:
    lo, hi = V.min(axis=0), V.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (V - lo) / span


def spea2_fitness(V: np.ndarray) -> dict[str, np.ndarray]:
    """Strength, raw fitness, density and total fitness for every row of ``V``."""
    V = np.asarray(V, dtype=float)
    n = len(V)
    le = (V[:, None, :] <= V[None, :, :]).all(axis=2)
    lt = (V[:, None, :] < V[None, :, :]).any(axis=2)
    dom = le & lt  # [i, j]: i dominates j
    strength = dom.sum(axis=1)
    raw = (dom * strength[:, None]).sum(axis=0).astype(float)
    if n > 1:
        N = _normalized(V)
        dist = np.sqrt(((N[:, None, :] - N[None, :, :]) ** 2).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        kth = min(int(math.isqrt(n)), n - 1)
        sigma = np.sort(dist, axis=1)[:, kth - 1]
    else:
        sigma = np.zeros(n)
    density = 1.0 / (sigma + 2.0)
    return {"strength": strength, "raw": raw, "density": density, "fitness": raw + density}


def spea2_select(pop, k: int) -> list[Individual]:
    members = _members(pop)
    if k >= len(members):
        return members
    V = _matrix(members)
    fit = spea2_fitness(V)["fitness"]
    order = sorted(range(len(V)), key=lambda i: (fit[i], tuple(V[i]), i))
    chosen = [i for i in order if fit[i] < 1.0]
    if len(chosen) <= k:
        rest = [i for i in order if fit[i] >= 1.0]
        chosen.extend(rest[: k - len(chosen)])
        return [members[i] for i in chosen]

    # truncation: drop the member closest to its neighbours, lexicographically over sorted distances
    N = _normalized(V[chosen])
    dist = np.sqrt(((N[:, None, :] - N[None, :, :]) ** 2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    alive = list(range(len(chosen)))
    rank = {c: r for r, c in enumerate(_tie_order(V[chosen]))}
    while len(alive) > k:
        sub = dist[np.ix_(alive, alive)]
        profiles = np.sort(sub, axis=1)
        victim = max(range(len(alive)), key=lambda a: (tuple(-profiles[a]), rank[alive[a]]))
        alive.pop(victim)
    return [members[chosen[a]] for a in alive]


# --- crossover --------------------------------------------------------------


def _fits(g: PipelineGraph, max_depth: int) -> bool:
    return g.root.kind.is_predictor and G.depth(g) <= max_depth


def subtree_crossover(
    a: PipelineGraph, b: PipelineGraph, max_depth: int, rng: np.random.Generator
) -> tuple[PipelineGraph, PipelineGraph]:
    """Swap a uniformly chosen subtree of ``a`` with one of ``b``."""
    pa_all, pb_all = G.paths(a), G.paths(b)
    for _ in range(CROSSOVER_RETRIES):
        pa = pa_all[int(rng.integers(len(pa_all)))]
        pb = pb_all[int(rng.integers(len(pb_all)))]
        ca = G.replace_subtree(a, pa, G.subtree(b, pb))
        cb = G.replace_subtree(b, pb, G.subtree(a, pa))
        if _fits(ca, max_depth) and _fits(cb, max_depth):
            return ca, cb
    return a, b


def common_region(a: PipelineGraph, b: PipelineGraph) -> list[G.Path]:
    """Positions present in both trees, walking from the roots by child index."""
    out = []

    def walk(na: NodeSpec, nb: NodeSpec, path: G.Path):
        out.append(path)
        for i in range(min(len(na.children), len(nb.children))):
            walk(na.children[i], nb.children[i], path + (i,))

    walk(a.root, b.root, ())
    return out


def one_point_crossover(
    a: PipelineGraph, b: PipelineGraph, max_depth: int, rng: np.random.Generator
) -> tuple[PipelineGraph, PipelineGraph]:
    """Swap subtrees rooted at one position of the shared structural region."""
    region = common_region(a, b)
    for _ in range(CROSSOVER_RETRIES):
        p = region[int(rng.integers(len(region)))]
        ca = G.replace_subtree(a, p, G.subtree(b, p))
        cb = G.replace_subtree(b, p, G.subtree(a, p))
        if _fits(ca, max_depth) and _fits(cb, max_depth):
            return ca, cb
    return a, b


# --- mutation ---------------------------------------------------------------


def mutate(
    g: PipelineGraph,
    kind: str,
    catalog: Sequence[ModelKind],
    task: TaskType,
    max_depth: int,
    rng: np.random.Generator,
) -> PipelineGraph:
    all_paths = G.paths(g)
    if kind == "simple":
        path = all_paths[int(rng.integers(len(all_paths)))]
        node = G.subtree(g, path)
        needs_predictor = not path or len(node.children) > 1
        options = compatible_kinds(catalog, task, predictors_only=needs_predictor)
        others = [k for k in options if k is not node.kind] or options
        new_kind = others[int(rng.integers(len(others)))]
        return G.replace_subtree(g, path, NodeSpec(new_kind, new_kind.default_params, node.children))
    if kind == "growth":
        path = all_paths[int(rng.integers(len(all_paths)))]
        budget = max_depth - len(path)
        if budget < 1:
            return g
        return G.replace_subtree(g, path, G.random_node(catalog, task, budget, rng))
    if kind == "reduce":
        candidates = all_paths[1:]
        if not candidates:
            return g
        return G.remove_subtree(g, candidates[int(rng.integers(len(candidates)))])
    raise ValueError(f"unknown mutation kind {kind!r}")


def reproduce(
    parents: Sequence[PipelineGraph],
    n_offspring: int,
    cross_rate: float,
    mut_rate: float,
    max_depth: int,
    catalog: Sequence[ModelKind],
    task: TaskType,
    rng: np.random.Generator,
) -> list[PipelineGraph]:
    """Bernoulli crossover then Bernoulli mutation per offspring; skipped crossover clones a parent."""
    if not parents:
        raise ValueError("no parents to reproduce from")
    out = []
    for i in range(n_offspring):
        a = parents[i % len(parents)]
        b = parents[int(rng.integers(len(parents)))]
        child = a
        if rng.random() < cross_rate:
            op = subtree_crossover if rng.random() < 0.5 else one_point_crossover
            child = op(a, b, max_depth, rng)[0]
        if rng.random() < mut_rate:
            child = mutate(child, MUTATION_KINDS[int(rng.integers(3))], catalog, task, max_depth, rng)
        out.append(child)
    return out
