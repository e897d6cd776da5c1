"""Task types and the catalog of atomic model kinds."""
from __future__ import annotations

from enum import Enum


class TaskType(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "binary_classification"

    @classmethod
    def parse(cls, text: str) -> "TaskType":
        aliases = {
            "regression": cls.REGRESSION,
            "regr": cls.REGRESSION,
            "classification": cls.CLASSIFICATION,
            "binary_classification": cls.CLASSIFICATION,
            "clf": cls.CLASSIFICATION,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown task type {text!r}") from None


_REG = frozenset({TaskType.REGRESSION})
_CLF = frozenset({TaskType.CLASSIFICATION})
_ANY = _REG | _CLF


class ModelKind(str, Enum):
    MEAN_BASELINE = "MeanBaseline"
    MAJORITY_BASELINE = "MajorityBaseline"
    LINEAR_REGRESSION = "LinearRegression"
    RIDGE_REGRESSION = "RidgeRegression"
    LOGISTIC_REGRESSION = "LogisticRegression"
    KNN = "KNearestNeighbors"
    DECISION_TREE = "DecisionTree"
    BAGGED_TREES = "BaggedTrees"
    GAUSSIAN_NB = "GaussianNaiveBayes"
    STANDARD_SCALER = "StandardScaler"

    @property
    def tasks(self) -> frozenset:
        return _TASKS[self]

    @property
    def is_transformer(self) -> bool:
        return self is ModelKind.STANDARD_SCALER

    @property
    def is_predictor(self) -> bool:
        return not self.is_transformer

    def supports(self, task: TaskType) -> bool:
        return task in _TASKS[self]

    @property
    def default_params(self) -> dict:
        return dict(DEFAULT_PARAMS.get(self, {}))


_TASKS = {
    ModelKind.MEAN_BASELINE: _REG,
    ModelKind.MAJORITY_BASELINE: _CLF,
    ModelKind.LINEAR_REGRESSION: _REG,
    ModelKind.RIDGE_REGRESSION: _REG,
    ModelKind.LOGISTIC_REGRESSION: _CLF,
    ModelKind.KNN: _ANY,
    ModelKind.DECISION_TREE: _ANY,
    ModelKind.BAGGED_TREES: _ANY,
    ModelKind.GAUSSIAN_NB: _CLF,
    ModelKind.STANDARD_SCALER: _ANY,
}

# Fixed per-kind hyperparameters; structure is searched, these are not.
DEFAULT_PARAMS = {
    ModelKind.RIDGE_REGRESSION: {"alpha": 1.0},
    ModelKind.LOGISTIC_REGRESSION: {"epochs": 200, "step": 0.1},
    ModelKind.KNN: {"k": 5},
    ModelKind.DECISION_TREE: {"max_depth": 5, "min_leaf": 2},
    ModelKind.BAGGED_TREES: {"n_trees": 20, "max_depth": 5, "min_leaf": 2, "bootstrap": 1},
}

DEFAULT_CATALOG = tuple(ModelKind)


def compatible_kinds(catalog, task: TaskType, *, predictors_only: bool = False) -> list[ModelKind]:
    out = [k for k in catalog if k.supports(task)]
    if predictors_only:
        out = [k for k in out if k.is_predictor]
    return out
