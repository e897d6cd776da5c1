"""Composite pipelines as rooted trees of atomic-model nodes.

Data flows from the leaves to the root.  A leaf sees the raw feature
matrix; an internal predictor is trained on the column-concatenation of its
children's outputs (stacking); a transformer node standardises whatever it
receives and forwards every column upward.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .atomic import TrainedAtomic, fit_atomic, predict_atomic
from .errors import DegenerateData, EmptyCatalog, ParseError, ShapeMismatch
from .kinds import ModelKind, TaskType, compatible_kinds

MAX_ARITY = 3
DEPTH_HARD_CAP = 6
LEAF_PROBABILITY = 0.4

Path = tuple[int, ...]


@dataclass(frozen=True)
class NodeSpec:
    kind: ModelKind
    params: dict = field(default_factory=dict)
    children: tuple["NodeSpec", ...] = ()

    @classmethod
    def make(cls, kind: ModelKind, children: Sequence["NodeSpec"] = ()) -> "NodeSpec":
        return cls(kind, kind.default_params, tuple(children))

    def with_children(self, children: Sequence["NodeSpec"]) -> "NodeSpec":
        return NodeSpec(self.kind, dict(self.params), tuple(children))


@dataclass(frozen=True)
class PipelineGraph:
    root: NodeSpec

    @classmethod
    def single(cls, kind: ModelKind) -> "PipelineGraph":
        return cls(NodeSpec.make(kind))

    def to_json(self) -> str:
        return serialize(self)

    def __str__(self) -> str:
        return describe(self.root)


def describe(node: NodeSpec) -> str:
    if not node.children:
        return node.kind.value
    return f"{node.kind.value}({', '.join(describe(c) for c in node.children)})"


# --- traversal ------------------------------------------------------------


def iter_nodes(node: NodeSpec, path: Path = ()) -> Iterator[tuple[Path, NodeSpec]]:
    """Pre-order walk yielding ``(path, node)``; a path is a tuple of child indices."""
    yield path, node
    for i, child in enumerate(node.children):
        yield from iter_nodes(child, path + (i,))


def paths(graph: PipelineGraph) -> list[Path]:
    return [p for p, _ in iter_nodes(graph.root)]


def subtree(graph_or_node, path: Path) -> NodeSpec:
    node = graph_or_node.root if isinstance(graph_or_node, PipelineGraph) else graph_or_node
    for i in path:
        node = node.children[i]
    return node


def replace_subtree(graph: PipelineGraph, path: Path, new: NodeSpec) -> PipelineGraph:
    def rec(node: NodeSpec, rest: Path) -> NodeSpec:
        if not rest:
            return new
        i = rest[0]
        kids = list(node.children)
        kids[i] = rec(kids[i], rest[1:])
        return node.with_children(kids)

    return PipelineGraph(rec(graph.root, path))


def remove_subtree(graph: PipelineGraph, path: Path) -> PipelineGraph:
    if not path:
        raise ValueError("cannot remove the root")
    parent = subtree(graph, path[:-1])
    kids = [c for i, c in enumerate(parent.children) if i != path[-1]]
    return replace_subtree(graph, path[:-1], parent.with_children(kids))


def _node_depth(node: NodeSpec) -> int:
    return 1 + max((_node_depth(c) for c in node.children), default=0)


def size(graph: PipelineGraph | NodeSpec) -> int:
    node = graph.root if isinstance(graph, PipelineGraph) else graph
    return sum(1 for _ in iter_nodes(node))


def depth(graph: PipelineGraph | NodeSpec) -> int:
    """Number of nodes on the longest root-to-leaf path."""
    node = graph.root if isinstance(graph, PipelineGraph) else graph
    return _node_depth(node)


# --- validation -----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    path: Path
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> list[str]:
        return [f"{'/'.join(map(str, v.path)) or 'root'}: {v.message}" for v in self.violations]


def validate(graph: PipelineGraph, task: TaskType, depth_cap: int, max_arity: int = MAX_ARITY) -> ValidationReport:
    report = ValidationReport()
    if graph.root.kind.is_transformer:
        report.violations.append(Violation((), "root must be a predictor"))
    for path, node in iter_nodes(graph.root):
        if not node.kind.supports(task):
            report.violations.append(Violation(path, "kind incompatible with task"))
        if len(node.children) > max_arity:
            report.violations.append(Violation(path, f"arity {len(node.children)} exceeds {max_arity}"))
        if node.kind.is_transformer and len(node.children) > 1:
            report.violations.append(Violation(path, "transformer takes at most one input"))
    d = depth(graph)
    if d > depth_cap:
        report.violations.append(Violation((), f"depth exceeds cap ({d} > {depth_cap})"))
    return report


def is_valid(graph: PipelineGraph, task: TaskType, depth_cap: int, max_arity: int = MAX_ARITY) -> bool:
    return validate(graph, task, depth_cap, max_arity).ok


# --- random generation ----------------------------------------------------


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


def random_node(
    catalog: Sequence[ModelKind],
    task: TaskType,
    max_depth: int,
    rng: np.random.Generator,
    *,
    predictor_root: bool = True,
    max_arity: int = MAX_ARITY,
) -> NodeSpec:
    predictors = compatible_kinds(catalog, task, predictors_only=True)
    if not predictors:
        raise EmptyCatalog(f"no predictor in the catalog supports {task.value}")
    anything = compatible_kinds(catalog, task)

    def grow(budget: int, root: bool) -> NodeSpec:
        kind = _pick(rng, predictors if root and predictor_root else anything)
        if budget <= 1:
            n_children = 0
        elif kind.is_transformer:
            n_children = int(rng.integers(2))
        elif rng.random() < LEAF_PROBABILITY:
            n_children = 0
        else:
            n_children = int(rng.integers(1, max_arity + 1))
        return NodeSpec.make(kind, [grow(budget - 1, False) for _ in range(n_children)])

    return grow(max_depth, True)


def random_pipeline(
    catalog: Sequence[ModelKind],
    task: TaskType,
    max_depth: int,
    rng: np.random.Generator,
    max_arity: int = MAX_ARITY,
) -> PipelineGraph:
    """Grow a random valid pipeline no deeper than ``max_depth``; the root is a predictor."""
    if max_depth < 1:
        raise ValueError("max_depth must be positive")
    return PipelineGraph(random_node(catalog, task, max_depth, rng, max_arity=max_arity))


# --- fitting --------------------------------------------------------------


@dataclass(frozen=True)
class FittedNode:
    kind: ModelKind
    model: TrainedAtomic
    children: tuple["FittedNode", ...]


@dataclass(frozen=True)
class FittedPipeline:
    graph: PipelineGraph
    root: FittedNode
    task: TaskType
    n_features: int
    fit_seconds: float


def _as_matrix(out: np.ndarray) -> np.ndarray:
    return out[:, None] if out.ndim == 1 else out


def _node_input(children_out: list[np.ndarray], X: np.ndarray) -> np.ndarray:
    if not children_out:
        return X
    return np.hstack([_as_matrix(o) for o in children_out])


def _fit_node(node: NodeSpec, X: np.ndarray, y: np.ndarray, rng: np.random.Generator):
    fitted_kids = []
    outs = []
    for child in node.children:
        fk, out = _fit_node(child, X, y, rng)
        fitted_kids.append(fk)
        outs.append(out)
    inp = _node_input(outs, X)
    model = fit_atomic(node.kind, inp, y, rng, node.params)
    return FittedNode(node.kind, model, tuple(fitted_kids)), predict_atomic(model, inp)


def _predict_node(fnode: FittedNode, X: np.ndarray) -> np.ndarray:
    inp = _node_input([_predict_node(c, X) for c in fnode.children], X)
    return predict_atomic(fnode.model, inp)


def node_input_width(fitted: FittedPipeline, path: Path = ()) -> int:
    """Column count the node at ``path`` was trained on."""
    node = fitted.root
    for i in path:
        node = node.children[i]
    return node.model.n_features


def fit_arrays(
    graph: PipelineGraph, X: np.ndarray, y: np.ndarray, task: TaskType, rng: np.random.Generator
) -> FittedPipeline:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2:
        raise DegenerateData("training data needs at least two samples")
    if task is TaskType.CLASSIFICATION and np.unique(y).size < 2:
        raise DegenerateData("classification target has a single class")
    start = time.perf_counter()
    root, _ = _fit_node(graph.root, X, y, rng)
    return FittedPipeline(graph, root, task, X.shape[1], time.perf_counter() - start)


def fit(graph: PipelineGraph, train, rng: np.random.Generator) -> FittedPipeline:
    """Fit every node bottom-up on a :class:`compevo.data.Dataset`."""
    return fit_arrays(graph, train.features, train.target, train.task, rng)


def predict(fitted: FittedPipeline, features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[1] != fitted.n_features:
        raise ShapeMismatch(f"expected {fitted.n_features} columns, got shape {X.shape}")
    out = _predict_node(fitted.root, X)
    if fitted.task is TaskType.CLASSIFICATION:
        out = np.clip(out, 0.0, 1.0)
    return out


# --- serialization --------------------------------------------------------


def _to_obj(node: NodeSpec) -> dict:
    return {
        "kind": node.kind.value,
        "params": dict(sorted(node.params.items())),
        "children": [_to_obj(c) for c in node.children],
    }


def serialize(graph: PipelineGraph) -> str:
    """Canonical compact JSON; equal graphs give equal text."""
    return json.dumps(_to_obj(graph.root), sort_keys=True, separators=(",", ":"))


def graph_from_obj(obj) -> PipelineGraph:
    """Build a graph from parsed JSON; schema errors carry the pre-order node index."""
    counter = [0]

    def rec(o) -> NodeSpec:
        pos = counter[0]
        counter[0] += 1
        if not isinstance(o, dict) or "kind" not in o:
            raise ParseError("node must be an object with a 'kind' field", pos)
        try:
            kind = ModelKind(o["kind"])
        except ValueError:
            raise ParseError(f"unknown model kind {o['kind']!r}", pos) from None
        params = o.get("params", {})
        if not isinstance(params, dict) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in params.values()
        ):
            raise ParseError("params must map names to numbers", pos)
        kids = o.get("children", [])
        if not isinstance(kids, list):
            raise ParseError("children must be a list", pos)
        merged = kind.default_params
        merged.update(params)
        return NodeSpec(kind, merged, tuple(rec(k) for k in kids))

    return PipelineGraph(rec(obj))


def deserialize(text: str) -> PipelineGraph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.pos) from None
    return graph_from_obj(obj)
