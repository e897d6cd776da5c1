import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compevo.atomic import fit_atomic, logistic_gd, predict_atomic
from compevo.errors import DegenerateData, ShapeMismatch
from compevo.kinds import ModelKind as K, TaskType

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0.0, 1.0, 1.0, 0.0])


def test_ols_normal_equations():
    m = fit_atomic(K.LINEAR_REGRESSION, [[0.0], [1.0], [2.0]], [1.0, 3.0, 5.0])
    assert m.state["coef"][0] == pytest.approx(2.0, abs=1e-9)
    assert m.state["intercept"] == pytest.approx(1.0, abs=1e-9)
    assert not m.ridge_fallback


def test_ols_collinear_falls_back_to_ridge():
    x = np.arange(10.0)
    X = np.column_stack([x, 2 * x])
    m = fit_atomic(K.LINEAR_REGRESSION, X, 3 * x + 1)
    assert m.ridge_fallback
    assert np.allclose(predict_atomic(m, X), 3 * x + 1, atol=1e-4)


def test_majority_rate():
    m = fit_atomic(K.MAJORITY_BASELINE, np.zeros((3, 1)), [1.0, 1.0, 0.0])
    assert m.state["label"] == 1
    assert predict_atomic(m, np.zeros((5, 1))) == pytest.approx([2 / 3] * 5)


def tree_xor_params():
    return {"max_depth": 2, "min_leaf": 1}


def test_tree_solves_xor_at_depth_two():
    m = fit_atomic(K.DECISION_TREE, XOR_X, XOR_Y, params=tree_xor_params())
    assert np.array_equal(predict_atomic(m, XOR_X), XOR_Y)


def test_tree_matches_exhaustive_split_oracle():
    """Depth-1 tree: best single split by exhaustive search over thresholds."""
    rng = np.random.default_rng(4)
    X = rng.normal(size=(30, 3))
    y = X[:, 1] ** 2 + rng.normal(scale=0.1, size=30)
    best = None
    for f in range(3):
        vals = np.unique(X[:, f])
        for t in (vals[:-1] + vals[1:]) / 2:
            left = X[:, f] <= t
            if left.sum() < 2 or (~left).sum() < 2:
                continue
            sse = ((y[left] - y[left].mean()) ** 2).sum() + ((y[~left] - y[~left].mean()) ** 2).sum()
            if best is None or sse < best[0] - 1e-12:
                best = (sse, np.where(left, y[left].mean(), y[~left].mean()))
    m = fit_atomic(K.DECISION_TREE, X, y, params={"max_depth": 1, "min_leaf": 2})
    assert np.allclose(predict_atomic(m, X), best[1], atol=1e-12)


def test_tree_matches_reference_library():
    tree = pytest.importorskip("sklearn.tree")
    rng = np.random.default_rng(9)
    X = rng.normal(size=(80, 4))
    y = np.sin(X[:, 0]) + X[:, 2]
    ref = tree.DecisionTreeRegressor(max_depth=5, min_samples_leaf=2, random_state=0).fit(X, y)
    ours = fit_atomic(K.DECISION_TREE, X, y)
    assert np.allclose(predict_atomic(ours, X), ref.predict(X), atol=1e-10)


def test_gaussian_nb_separated_clusters():
    X = np.concatenate([np.linspace(-6, -4, 10), np.linspace(4, 6, 10)])[:, None]
    y = np.repeat([0.0, 1.0], 10)
    scores = predict_atomic(fit_atomic(K.GAUSSIAN_NB, X, y), X)
    assert np.all(scores[y == 1] > 0.5) and np.all(scores[y == 0] < 0.5)


def test_gaussian_nb_variance_floor():
    X = np.array([[1.0, 0.0], [1.0, 0.0], [2.0, 5.0], [2.0, 5.0]])
    m = fit_atomic(K.GAUSSIAN_NB, X, [0.0, 0.0, 1.0, 1.0])
    assert np.all(m.state["vars"] >= 1e-9)
    assert np.all(np.isfinite(predict_atomic(m, X)))


def test_ridge_small_alpha_approaches_ols():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 4))
    y = X @ [1.0, -2.0, 0.5, 3.0] + 0.3 + rng.normal(scale=0.1, size=50)
    ols = predict_atomic(fit_atomic(K.LINEAR_REGRESSION, X, y), X)
    ridge = predict_atomic(fit_atomic(K.RIDGE_REGRESSION, X, y, params={"alpha": 1e-8}), X)
    assert np.max(np.abs(ols - ridge)) <= 1e-4


def test_single_unbootstrapped_tree_equals_decision_tree():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 3))
    y = X[:, 0] * X[:, 1]
    tree = predict_atomic(fit_atomic(K.DECISION_TREE, X, y), X)
    bag = predict_atomic(fit_atomic(K.BAGGED_TREES, X, y, rng, {"n_trees": 1, "bootstrap": 0}), X)
    assert np.array_equal(tree, bag)


def test_bagging_seeded():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] > 0).astype(float)
    a = predict_atomic(fit_atomic(K.BAGGED_TREES, X, y, np.random.default_rng(8)), X)
    b = predict_atomic(fit_atomic(K.BAGGED_TREES, X, y, np.random.default_rng(8)), X)
    c = predict_atomic(fit_atomic(K.BAGGED_TREES, X, y, np.random.default_rng(9)), X)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_scaler_constant_column():
    X = np.array([[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]])
    m = fit_atomic(K.STANDARD_SCALER, X, np.zeros(3))
    assert m.state["std"][1] == 1.0
    out = predict_atomic(m, X)
    assert out.shape == (3, 2) and np.allclose(out[:, 1], 0.0)


def test_logistic_loss_non_increasing():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 2))
    y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.5, size=60) > 0).astype(float)
    _, _, losses = logistic_gd(X, y, epochs=200, step=0.1, track_loss=True)
    assert np.all(np.diff(losses) <= 1e-12)


def test_shape_errors():
    m = fit_atomic(K.KNN, np.zeros((4, 2)), np.arange(4.0))
    with pytest.raises(ShapeMismatch):
        predict_atomic(m, np.zeros((1, 3)))
    with pytest.raises(DegenerateData):
        fit_atomic(K.MEAN_BASELINE, np.zeros((1, 2)), [1.0])


CLASSIFIERS = [k for k in K if k.supports(TaskType.CLASSIFICATION) and k.is_predictor]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(CLASSIFIERS), st.integers(6, 40))
def test_classifier_scores_in_unit_interval(seed, kind, n):
    rng = np.random.default_rng(seed)
    X = rng.normal(scale=rng.uniform(0.1, 100), size=(n, 3))
    y = np.zeros(n)
    y[rng.permutation(n)[: max(1, n // 3)]] = 1.0
    scores = predict_atomic(fit_atomic(kind, X, y, rng), rng.normal(scale=50, size=(10, 3)))
    assert np.all((scores >= 0) & (scores <= 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([k for k in K if k.supports(TaskType.REGRESSION) and k.is_predictor]))
def test_regressors_finite(seed, kind):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 2))
    X[:, 1] = X[:, 0]  # collinear on purpose
    y = rng.normal(size=20)
    assert np.all(np.isfinite(predict_atomic(fit_atomic(kind, X, y, rng), X)))


def test_knn_ties_break_by_training_order():
    X = np.array([[0.0], [1.0], [-1.0]])
    m = fit_atomic(K.KNN, X, [10.0, 20.0, 30.0], params={"k": 1})
    # 0.5 is equidistant from 0 and 1; the earlier training row wins
    assert predict_atomic(m, [[0.5]])[0] == 10.0


@pytest.mark.parametrize("kind", list(K))
def test_every_kind_fits(kind):
    X = np.array(list(itertools.product([0.0, 1.0, 2.0], repeat=2)))
    y = (X.sum(axis=1) > 2).astype(float)
    out = predict_atomic(fit_atomic(kind, X, y, np.random.default_rng(0)), X)
    assert np.all(np.isfinite(out))
