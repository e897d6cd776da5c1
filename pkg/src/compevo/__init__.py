"""Multi-objective evolutionary design of composite ML pipelines."""
from .data import Dataset, load_csv, synth_dataset, train_test_split
from .errors import CompevoError, ConfigError, DataError
from .graph import NodeSpec, PipelineGraph, deserialize, serialize
from .kinds import ModelKind, TaskType
from .objectives import ObjectiveVector, ParetoArchive, hypervolume, pareto_update
from .optimizer import Budget, run_parameter_free, run_single_objective, run_steady_state_mo

__all__ = [
    "Budget",
    "CompevoError",
    "ConfigError",
    "DataError",
    "Dataset",
    "ModelKind",
    "NodeSpec",
    "ObjectiveVector",
    "ParetoArchive",
    "PipelineGraph",
    "TaskType",
    "deserialize",
    "hypervolume",
    "load_csv",
    "pareto_update",
    "run_parameter_free",
    "run_single_objective",
    "run_steady_state_mo",
    "serialize",
    "synth_dataset",
    "train_test_split",
]
